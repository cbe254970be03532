"""Chain diagnostics: effective sample size and joint-distribution tests.

The joint-distribution ("getting it right") machinery compares two ways
of sampling the model's parameters jointly with data: exact independent
prior draws versus a chain that alternates one sampler cycle with a
data redraw.  Matching functional means (|z| small) on micro instances
is the package's end-to-end correctness check for every full
conditional at once.

The compared functionals (discount, lambda, alpha0, first stick weight)
have directly sampleable prior marginals, so the marginal side is exact
and vectorized; materializing full stick-breaking states there would
have unbounded cost when the discount prior puts mass near one.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .exceptions import InputError, ParameterError
from . import mcmc
from .mcmc import ChainState, SamplerConfig

__all__ = [
    "effective_sample_size",
    "prior_functional_draws",
    "redraw_data",
    "geweke_z_scores",
]


def effective_sample_size(x):
    """ESS through Geyer's initial positive sequence on FFT autocovariances."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4:
        return float(n)
    x = x - x.mean()
    if not np.any(x):
        return float(n)
    nfft = int(2 ** math.ceil(math.log2(2 * n)))
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n].real / n
    if acov[0] <= 0:
        return float(n)
    rho = acov / acov[0]
    # Geyer: accumulate adjacent-lag pairs while their sum stays positive
    acc = 0.0
    k = 1
    while k + 1 < n:
        p = rho[k] + rho[k + 1]
        if p < 0:
            break
        acc += p
        k += 2
    tau = 1.0 + 2.0 * acc
    return float(max(n / max(tau, 1e-12), 1.0))


def _proper_alpha0(spec):
    if spec.is_scale or spec.shape_centering[0] == "pareto2":
        if spec.alpha0_prior == "jeffreys":
            raise ParameterError(
                "joint-distribution tests need a proper alpha0 prior (Gamma), not Jeffreys"
            )
        return spec.alpha0_prior
    return None


def prior_functional_draws(spec, size, rng, x0=None):
    """Vectorized exact prior draws of the compared functionals.

    Returns a dict of arrays matching :func:`state_functionals`:
    discount (or the leading-stick discount at ``x0``), the first stick
    weight pi1 = V_1, and lambda / alpha0 where the class defines them.
    """
    out = {}
    if spec.model_class == "cond_scale":
        if x0 is None:
            raise InputError("conditional draws need the covariate row x0")
        p = spec.n_covariates
        beta1 = rng.normal(0.0, math.sqrt(spec.coef_prior_var), size=(size, p))
        eta = np.clip(beta1 @ np.asarray(x0, dtype=float), -30.0, 30.0)
        d1 = special.expit(eta)
        u1 = rng.uniform(size=size)
        v1 = special.betaincinv(1.0 - d1, d1, u1)
        out["discount1"] = d1
        out["pi1"] = np.clip(v1, 1e-300, 1.0 - 1e-16)
    else:
        if spec.discount_fixed is not None:
            d = np.full(size, spec.discount_fixed)
        else:
            a_d, b_d = spec.discount_prior
            d = np.clip(rng.beta(a_d, b_d, size=size), 1e-9, 1.0 - 1e-9)
        v1 = rng.beta(1.0 - d, spec.precision + d)
        out["discount"] = d
        out["pi1"] = np.clip(v1, 1e-300, 1.0 - 1e-16)
    if spec.is_scale:
        a_l, b_l = spec.lambda_prior
        out["lambda"] = rng.gamma(a_l, 1.0 / b_l, size=size)
    prior = _proper_alpha0(spec)
    if prior is not None:
        a_a, b_a = prior
        out["alpha0"] = rng.gamma(a_a, 1.0 / b_a, size=size)
    return out


def state_functionals(state, spec, x0=None):
    """Scalar functionals compared by the joint test (per model class)."""
    out = {}
    if spec.model_class == "cond_scale":
        from .models import logistic_discount

        out["discount1"] = float(logistic_discount(state.coefs[:1], x0)[0])
        out["pi1"] = float(state.cond_v[0, 0])
    else:
        out["discount"] = float(state.discount)
        out["pi1"] = float(state.v[0])
    if spec.is_scale:
        out["lambda"] = float(state.lam)
    if spec.is_scale or spec.shape_centering[0] == "pareto2":
        out["alpha0"] = float(state.alpha0[0])
    return out


def redraw_data(state, spec, rng):
    """Data | latent state, in the sampler's internal representation.

    Scale classes draw the Erlang values directly; the shape class draws
    w = log y ~ Exponential(rate alpha), matching the internal log-space
    representation (see :func:`heavymix.mcmc.internal_data`).
    """
    n = state.z.size
    if spec.is_scale:
        sig = state.atoms[state.z]
        return rng.gamma(np.ceil(sig), sig / state.lam)
    alpha = state.atoms[state.z]
    return (rng.standard_exponential(size=n) / alpha)[:, None]


def _sc_initial_state(spec, n, rng, x_mat, kappa):
    """Cheap valid state to start the successive-conditional chain.

    Hyperparameters come from their priors; allocations start in the
    first component.  The chain's kernel preserves the joint prior, so
    a short discard window removes the initialization bias.
    """
    discount = (
        spec.discount_fixed
        if spec.discount_fixed is not None
        else float(np.clip(rng.beta(*spec.discount_prior), 1e-9, 1.0 - 1e-9))
    )
    a_l, b_l = spec.lambda_prior
    prior = _proper_alpha0(spec)
    alpha0 = (
        rng.gamma(prior[0], 1.0 / prior[1], size=spec.dim)
        if prior is not None
        else np.full(spec.dim, 2.0)
    )
    state = ChainState(
        z=np.zeros(n, dtype=np.int64),
        u=np.zeros(n),
        v=np.empty(0),
        atoms=np.empty((0, spec.dim)) if spec.is_scale else np.empty(0),
        alpha0=alpha0,
        discount=discount,
        lam=float(rng.gamma(a_l, 1.0 / b_l)),
        kappa=kappa,
        steps={"atom": 0.8, "discount": 0.8, "lambda": 0.5, "coef": 0.5, "stick": 1.0},
    )
    if spec.model_class == "cond_scale":
        state.stick_u = np.empty(0)
        state.coefs = np.empty((0, spec.n_covariates))
        state.cond_v = np.empty((n, 0))
    mcmc._append_components(state, spec, x_mat, rng, 1)
    bound = np.exp(state.log_xi(state.z + 1.0))
    state.u = np.maximum(bound * rng.uniform(size=n), 1e-300)
    mcmc._ensure_completeness(state, spec, x_mat, rng)
    return state


def geweke_z_scores(spec, n, cycles, rng, x=None, config=None, n_marginal=None,
                    discard=1000):
    """Joint-distribution test z-scores per functional.

    Compares means of :func:`state_functionals` between ``n_marginal``
    exact prior draws and a successive-conditional chain of ``cycles``
    transitions (one sampler cycle then a data redraw each, first
    ``discard`` dropped).  The chain side uses an
    autocorrelation-adjusted standard error.
    """
    config = config or SamplerConfig(burn_in=0, keep=0, adapt=False)
    if config.adapt:
        raise InputError("joint-distribution chains must run with adaptation off")
    n_marginal = n_marginal or cycles
    x_mat = mcmc._as_covariates(spec, x, n)
    x0 = None if x_mat is None else x_mat[0]

    mc = prior_functional_draws(spec, n_marginal, rng, x0=x0)

    state = _sc_initial_state(spec, n, rng, x_mat, config.slice_kappa)
    y = redraw_data(state, spec, rng)
    sc_rows = []
    for it in range(discard + cycles):
        mcmc.one_cycle(state, spec, y, x_mat, rng, iteration=it)
        y = redraw_data(state, spec, rng)
        if it >= discard:
            sc_rows.append(state_functionals(state, spec, x0=x0))

    scores = {}
    for name in sorted(mc):
        a = np.asarray(mc[name], dtype=float)
        b = np.array([row[name] for row in sc_rows])
        se2 = a.var(ddof=1) / a.size + b.var(ddof=1) / effective_sample_size(b)
        scores[name] = float((a.mean() - b.mean()) / math.sqrt(max(se2, 1e-300)))
    return scores
