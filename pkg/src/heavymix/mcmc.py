"""Slice-sampler posterior inference for the four mixture model classes.

The sampler uses the slice-efficient auxiliary scheme: each observation
carries a slice variable u_i below a deterministic geometric sequence
xi_h = (1 - kappa) kappa**(h-1) evaluated at its allocation, and the
allocation conditional weights each eligible component by
pi_h / xi_h times its kernel likelihood.  Marginalizing the slices
recovers the exact infinite mixture, while the active truncation H*
stays logarithmic in the smallest slice (a plain pi-driven slice would
need truncations with infinite expected size under stable-process
weights, whose sticks decay polynomially).

Update cycle (one call of :func:`one_cycle`):

    slices -> allocations -> sticks -> atoms -> alpha0 -> discount
    -> lambda -> coefficients (conditional class only)

Random-walk steps are tuned to a 20--40% acceptance window during
burn-in via Robbins-Monro and frozen afterwards, so the post burn-in
chain is a fixed Markov kernel.  Everything is driven by one explicit
``numpy.random.Generator``; identical seeds give identical chains.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special, stats

from .distributions import GumbelCopula, ParetoII
from .exceptions import InputError, ParameterError, SliceInvariantError
from .models import MixtureModelSpec, logistic_discount
from . import chainlog

logger = logging.getLogger(__name__)

__all__ = [
    "SamplerConfig",
    "ChainState",
    "Snapshot",
    "ChainResult",
    "init_state",
    "one_cycle",
    "run_chain",
    "resolve_spec",
    "update_slices",
    "update_allocations",
    "update_sticks",
    "update_atoms",
    "update_alpha0",
    "update_discount",
    "update_lambda",
    "update_coefs",
]

_H_HARD_CAP = 100_000
_V_CLIP_LO, _V_CLIP_HI = 1e-300, 1.0 - 1e-16


@dataclass(frozen=True)
class SamplerConfig:
    """Run-length, step sizes, slice sequence, and tuning switches."""

    burn_in: int = 5000
    keep: int = 5000
    thin: int = 1
    step_atom: float = 0.8
    step_discount: float = 0.8
    step_lambda: float = 0.5
    step_coef: float = 0.5
    step_stick: float = 1.0
    slice_kappa: float = 0.9
    adapt: bool = True
    target_accept: float = 0.3
    validate: bool = False

    def __post_init__(self):
        if self.burn_in < 0 or self.keep < 0 or self.thin < 1:
            raise ParameterError("burn_in/keep must be nonnegative, thin positive")
        for name in ("step_atom", "step_discount", "step_lambda", "step_coef", "step_stick"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")
        if not (0.0 < self.slice_kappa < 1.0):
            raise ParameterError("slice_kappa must lie in (0, 1)")
        if not (0.0 < self.target_accept < 1.0):
            raise ParameterError("target acceptance must lie in (0, 1)")


@dataclass
class ChainState:
    """Full latent state; arrays are sized to the active truncation H*."""

    z: np.ndarray
    u: np.ndarray
    v: np.ndarray                  # stick fractions (unused for cond_scale)
    atoms: np.ndarray              # (H, d) scale atoms or (H,) shape atoms
    alpha0: np.ndarray             # (d,)
    discount: float
    lam: float
    stick_u: np.ndarray | None = None   # (H,) shared uniforms, cond only
    coefs: np.ndarray | None = None     # (H, p), cond only
    cond_v: np.ndarray | None = None    # (n, H) cached stick fractions, cond only
    kappa: float = 0.5
    steps: dict = field(default_factory=dict)
    accepts: dict = field(default_factory=dict)
    alpha0_fallbacks: int = 0

    @property
    def h_star(self):
        return self.atoms.shape[0]

    def log_xi(self, h=None):
        """log slice sequence at 1-based indices h (default: active range)."""
        if h is None:
            h = np.arange(1, self.h_star + 1, dtype=float)
        h = np.asarray(h, dtype=float)
        return math.log1p(-self.kappa) + (h - 1.0) * math.log(self.kappa)


@dataclass(frozen=True)
class Snapshot:
    """One kept iteration: scalars plus weight/atom arrays."""

    iteration: int
    discount: float
    lam: float
    alpha0: np.ndarray
    weights: np.ndarray | None
    residual: float | None
    atoms: np.ndarray
    stick_u: np.ndarray | None = None
    coefs: np.ndarray | None = None


@dataclass(frozen=True)
class ChainResult:
    spec: MixtureModelSpec
    snapshots: list
    summary: object | None
    acceptance: dict
    alpha0_fallbacks: int


# ---------------------------------------------------------------------------
# weights / completeness machinery


def _stick_weights(v):
    compl = np.cumprod(1.0 - v)
    w = v.copy()
    w[1:] *= compl[:-1]
    return w, compl[-1]


def _cond_v_column(spec, coefs_row, u_h, h, x_mat):
    # per-observation stick fraction for stick h: Beta quantile of the
    # shared uniform at discount logistic(x_i' beta_h)
    eta = np.clip(x_mat @ coefs_row, -30.0, 30.0)
    dh = special.expit(eta)
    v = special.betaincinv(1.0 - dh, h * dh, u_h)
    return np.clip(v, _V_CLIP_LO, _V_CLIP_HI)


def _cond_weights(cond_v):
    compl = np.cumprod(1.0 - cond_v, axis=1)
    w = cond_v.copy()
    w[:, 1:] *= compl[:, :-1]
    return w, compl[:, -1]


def _weights_for(state, spec):
    """Per-observation weight matrix (n, H) and residual per observation."""
    if spec.model_class == "cond_scale":
        return _cond_weights(state.cond_v)
    w, resid = _stick_weights(state.v)
    n = state.z.size
    return np.broadcast_to(w, (n, w.size)), np.full(n, resid)


def _residuals(state, spec):
    if spec.model_class == "cond_scale":
        return np.cumprod(1.0 - state.cond_v, axis=1)[:, -1]
    return np.array([np.prod(1.0 - state.v)])


def _draw_stick(spec, state, rng, h):
    """Prior draw of stick fraction(s) for 1-based stick index array h."""
    d = state.discount
    v = rng.beta(1.0 - d, spec.precision + h * d)
    return np.clip(v, _V_CLIP_LO, _V_CLIP_HI)


def _centering_margins(spec, state):
    return [ParetoII(alpha=state.alpha0[k], scale=spec.margin_scale[k]) for k in range(spec.dim)]


def _draw_atoms(spec, state, rng, size):
    """Fresh centering draws for ``size`` new atoms."""
    if spec.is_scale:
        theta = spec.copula_theta if spec.copula_theta is not None else 1.0
        margins = _centering_margins(spec, state)
        if theta == 1.0 or spec.dim == 1:
            cols = [m.sample(rng, size) for m in margins]
            return np.column_stack(cols)
        uv = GumbelCopula(theta).sample(rng, size)
        return np.column_stack([m.quantile(uv[:, k]) for k, m in enumerate(margins)])
    if spec.shape_centering[0] == "gamma":
        return spec.shape_centering_dist().sample(rng, size)
    return spec.shape_centering_dist().sample(rng, size)


def _centering_logpdf(spec, state, atoms):
    """Joint centering log density per atom (copula density included)."""
    if spec.is_scale:
        atoms2 = atoms if atoms.ndim == 2 else atoms[:, None]
        margins = _centering_margins(spec, state)
        lp = np.zeros(atoms2.shape[0])
        for k, m in enumerate(margins):
            lp += m.logpdf(atoms2[:, k])
        theta = spec.copula_theta if spec.copula_theta is not None else 1.0
        if theta > 1.0 and spec.dim == 2:
            f1 = np.clip(margins[0].cdf(atoms2[:, 0]), 1e-15, 1.0 - 1e-15)
            f2 = np.clip(margins[1].cdf(atoms2[:, 1]), 1e-15, 1.0 - 1e-15)
            lp += GumbelCopula(theta).logpdf(f1, f2)
        return lp
    cent = spec.shape_centering_dist()
    return cent.logpdf(atoms)


def _append_components(state, spec, x_mat, rng, count):
    h0 = state.h_star
    idx = np.arange(h0 + 1, h0 + count + 1, dtype=float)
    new_atoms = _draw_atoms(spec, state, rng, count)
    if spec.is_scale:
        state.atoms = np.vstack([state.atoms, new_atoms])
    else:
        state.atoms = np.concatenate([state.atoms, np.ravel(new_atoms)])
    if spec.model_class == "cond_scale":
        new_u = rng.uniform(size=count)
        new_u = np.clip(new_u, 1e-12, 1.0 - 1e-12)
        new_b = rng.normal(0.0, math.sqrt(spec.coef_prior_var), size=(count, spec.n_covariates))
        state.stick_u = np.concatenate([state.stick_u, new_u])
        state.coefs = np.vstack([state.coefs, new_b])
        cols = [
            _cond_v_column(spec, new_b[j], new_u[j], h0 + 1 + j, x_mat)[:, None]
            for j in range(count)
        ]
        state.cond_v = np.hstack([state.cond_v] + cols)
    else:
        state.v = np.concatenate([state.v, _draw_stick(spec, state, rng, idx)])


def _trim_components(state, spec, keep):
    state.atoms = state.atoms[:keep]
    if spec.model_class == "cond_scale":
        state.stick_u = state.stick_u[:keep]
        state.coefs = state.coefs[:keep]
        state.cond_v = state.cond_v[:, :keep]
    else:
        state.v = state.v[:keep]


def _required_components(state):
    """Number of components the slice sequence makes eligible somewhere.

    This is the largest h with xi_h > min_i u_i; logarithmic in the
    smallest slice because xi is geometric.
    """
    if state.u.size == 0:
        return 1
    u_min = max(float(state.u.min()), 1e-300)
    top = (math.log(u_min) - math.log1p(-state.kappa)) / math.log(state.kappa) + 1.0
    need = max(int(math.ceil(top)) - 1, 1)
    # adjust for float slop at the boundary xi_h == u_min
    while state.log_xi(np.array([need + 1]))[0] > math.log(u_min):
        need += 1
    return need


def _ensure_completeness(state, spec, x_mat, rng, iteration=None):
    need = _required_components(state)
    keep = max(need, int(state.z.max()) + 1 if state.z.size else 1, 1)
    if keep > _H_HARD_CAP:
        raise SliceInvariantError(f"active truncation exceeded {_H_HARD_CAP}", iteration)
    if keep > state.h_star:
        _append_components(state, spec, x_mat, rng, keep - state.h_star)
    elif keep < state.h_star:
        _trim_components(state, spec, keep)
    return state


def assert_slice_invariant(state, spec, iteration=None, coverage_only=False):
    """Raise unless the slice-sampler invariants hold.

    Coverage -- every component the slice sequence makes eligible is
    instantiated (xi_{H*+1} <= min u) -- is maintained at all times.
    The pointwise bound u_i < xi_{z_i} holds between the slice and
    allocation updates; sticks are refreshed with the slices integrated
    out, so that bound is only asserted when ``coverage_only`` is False.
    """
    if state.z.size == 0:
        return
    if not coverage_only:
        log_pick = state.log_xi(state.z + 1.0)
        if np.any(np.log(state.u) >= log_pick):
            raise SliceInvariantError("slice variable not below its slice bound", iteration)
    next_log_xi = state.log_xi(np.array([state.h_star + 1]))[0]
    if next_log_xi > math.log(max(float(state.u.min()), 1e-300)):
        raise SliceInvariantError("instantiated components do not cover the slices", iteration)


# ---------------------------------------------------------------------------
# initialization


def _as_data(spec, y):
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2 or y.shape[1] != spec.dim:
        raise InputError(f"data must have shape (n, {spec.dim})")
    if y.shape[0] == 0:
        return y
    if spec.is_scale:
        if np.any(y <= 0.0):
            raise InputError("Erlang scale mixtures need strictly positive data")
    else:
        if np.any(y <= 1.0):
            raise InputError("the Pareto shape kernel needs data above 1")
    return y


def internal_data(spec, y2):
    """Sampler-internal data representation.

    The shape class works on w = log y throughout (the Pareto kernel on
    y is the exponential kernel on w), which keeps super-heavy-tailed
    draws finite; scale classes use y as is.
    """
    return y2 if spec.is_scale else np.log(y2)


def _as_covariates(spec, x, n):
    if spec.model_class != "cond_scale":
        if x is not None:
            raise InputError("covariates are only accepted by the conditional class")
        return None
    if x is None:
        raise InputError("the conditional class requires covariates")
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape != (n, spec.n_covariates):
        raise InputError(f"covariates must have shape ({n}, {spec.n_covariates})")
    return x


def resolve_spec(spec, y):
    """Fill data-driven spec fields (empirical-Bayes copula parameter).

    The copula parameter is set once, before sampling, by rank-based
    Kendall-tau inversion theta = 1 / (1 - tau) on the two data columns,
    clipped into [1, 50]; nonpositive tau gives independence.
    """
    if spec.copula_theta is not None or spec.dim == 1 or not spec.is_scale:
        return spec
    y = np.asarray(y, dtype=float)
    if spec.dim != 2:
        return replace(spec, copula_theta=1.0)
    tau = stats.kendalltau(y[:, 0], y[:, 1]).statistic
    if not np.isfinite(tau) or tau <= 0.0:
        theta = 1.0
    else:
        theta = min(1.0 / (1.0 - min(tau, 0.98)), 50.0)
    return replace(spec, copula_theta=float(theta))


def init_state(spec, y, rng, x=None, config=None, _internal=False):
    """Deterministic-given-seed initial state: one occupied component.

    All allocations start in component 1, atoms come from the centering
    at alpha0 = 2, the discount sits at its prior mean (or fixed value),
    lambda at its prior mean, and slice variables are drawn consistently.
    """
    config = config or SamplerConfig()
    if not _internal:
        y = _as_data(spec, y)
    n = y.shape[0]
    x_mat = _as_covariates(spec, x, n)
    if spec.discount_fixed is not None:
        d0 = spec.discount_fixed
    else:
        a_d, b_d = spec.discount_prior
        d0 = a_d / (a_d + b_d)
    a_l, b_l = spec.lambda_prior
    state = ChainState(
        z=np.zeros(n, dtype=np.int64),
        u=np.zeros(n),
        v=np.empty(0),
        atoms=np.empty((0, spec.dim)) if spec.is_scale else np.empty(0),
        alpha0=np.full(spec.dim, 2.0),
        discount=float(d0),
        lam=a_l / b_l,
        kappa=config.slice_kappa,
        steps={
            "atom": config.step_atom,
            "discount": config.step_discount,
            "lambda": config.step_lambda,
            "coef": config.step_coef,
            "stick": config.step_stick,
        },
        accepts={},
    )
    if spec.model_class == "cond_scale":
        state.stick_u = np.empty(0)
        state.coefs = np.empty((0, spec.n_covariates))
        state.cond_v = np.empty((n, 0))
    _append_components(state, spec, x_mat, rng, 1)
    if n:
        bound = np.exp(state.log_xi(state.z + 1.0))
        state.u = np.maximum(bound * rng.uniform(size=n), 1e-300)
    _ensure_completeness(state, spec, x_mat, rng)
    return state


# ---------------------------------------------------------------------------
# individual updates


def update_slices(state, spec, x_mat, rng, iteration=None):
    """u_i ~ U(0, xi_{z_i}); then grow/trim the truncation to cover them."""
    n = state.z.size
    if n:
        bound = np.exp(state.log_xi(state.z + 1.0))
        state.u = np.maximum(bound * rng.uniform(size=n), 1e-300)
    _ensure_completeness(state, spec, x_mat, rng, iteration)
    return state


def _alloc_loglik(state, spec, y):
    # shape-class y arrives as w = log(data); see internal_data
    if spec.is_scale:
        sig = state.atoms
        a = np.ceil(sig)
        rate = state.lam / sig                      # (H, d)
        const = (a * np.log(rate) - special.gammaln(a)).sum(axis=1)
        return np.log(y) @ (a - 1.0).T - y @ rate.T + const
    alpha = state.atoms
    return np.log(alpha)[None, :] - y[:, 0][:, None] * (alpha + 1.0)[None, :]


def update_allocations(state, spec, y, x_mat, rng, iteration=None):
    """z_i from the discrete conditional over slice-eligible components.

    Eligibility is xi_h > u_i; eligible components carry probability
    proportional to (pi_h / xi_h) * kernel(y_i | atom_h).
    """
    n = state.z.size
    if n == 0:
        return state
    log_xi = state.log_xi()
    mask = log_xi[None, :] > np.log(state.u)[:, None]
    if not mask.any(axis=1).all():
        raise SliceInvariantError("observation with empty eligible set", iteration)
    w, _ = _weights_for(state, spec)
    log_w = np.log(np.maximum(w, 1e-300))
    ll = _alloc_loglik(state, spec, y) + log_w - log_xi[None, :]
    g = rng.gumbel(size=ll.shape)
    state.z = np.argmax(np.where(mask, ll + g, -np.inf), axis=1).astype(np.int64)
    return state


def update_sticks(state, spec, x_mat, rng, iteration=None):
    """Conjugate stick refresh (or shared-uniform MH for the conditional class)."""
    h = state.h_star
    counts = np.bincount(state.z, minlength=h).astype(float)
    n_gt = counts[::-1].cumsum()[::-1] - counts
    if spec.model_class != "cond_scale":
        idx = np.arange(1, h + 1, dtype=float)
        a = 1.0 - state.discount + counts
        b = spec.precision + idx * state.discount + n_gt
        state.v = np.clip(rng.beta(a, b), _V_CLIP_LO, _V_CLIP_HI)
    else:
        _update_stick_uniforms(state, spec, x_mat, rng, counts)
    _ensure_completeness(state, spec, x_mat, rng, iteration)
    return state


def _stick_col_loglik(state, h_idx, col_v):
    sel_eq = state.z == h_idx
    sel_gt = state.z > h_idx
    return float(np.log(col_v[sel_eq]).sum() + np.log1p(-col_v[sel_gt]).sum())


def _update_stick_uniforms(state, spec, x_mat, rng, counts):
    step = state.steps["stick"]
    acc = tot = 0
    for h_idx in range(state.h_star):
        cur_u = state.stick_u[h_idx]
        logit_new = math.log(cur_u / (1.0 - cur_u)) + step * rng.normal()
        new_u = 1.0 / (1.0 + math.exp(-np.clip(logit_new, -36.0, 36.0)))
        new_u = min(max(new_u, 1e-12), 1.0 - 1e-12)
        new_col = _cond_v_column(spec, state.coefs[h_idx], new_u, h_idx + 1, x_mat)
        delta = (
            _stick_col_loglik(state, h_idx, new_col)
            - _stick_col_loglik(state, h_idx, state.cond_v[:, h_idx])
            + math.log(new_u * (1.0 - new_u))
            - math.log(cur_u * (1.0 - cur_u))
        )
        tot += 1
        if math.log(rng.uniform()) < delta:
            acc += 1
            state.stick_u[h_idx] = new_u
            state.cond_v[:, h_idx] = new_col
    _record(state, "stick", acc, tot)


def update_atoms(state, spec, y, rng):
    """Random-walk MH on log atoms for occupied components; prior draws otherwise.

    The target couples the kernel likelihood of the allocated points with
    the full joint centering density (copula factor included when the
    centering is dependent); the log-scale proposal carries its Jacobian.
    """
    h = state.h_star
    counts = np.bincount(state.z, minlength=h).astype(float)
    occ = counts > 0
    n_occ = int(occ.sum())
    step = state.steps["atom"]
    acc = tot = 0
    if spec.is_scale:
        d = spec.dim
        s_y = np.zeros((h, d))
        s_ln = np.zeros((h, d))
        np.add.at(s_y, state.z, y)
        np.add.at(s_ln, state.z, np.log(y))
        for k in range(d):
            if n_occ == 0:
                break
            cur = state.atoms[occ, k]
            prop = cur * np.exp(step * rng.normal(size=n_occ))
            cur_ll = _erlang_cluster_loglik(cur, s_ln[occ, k], s_y[occ, k], counts[occ], state.lam)
            new_ll = _erlang_cluster_loglik(prop, s_ln[occ, k], s_y[occ, k], counts[occ], state.lam)
            cur_lp = _centering_logpdf(spec, state, state.atoms[occ])
            cand = state.atoms[occ].copy()
            cand[:, k] = prop
            new_lp = _centering_logpdf(spec, state, cand)
            delta = new_ll - cur_ll + new_lp - cur_lp + np.log(prop) - np.log(cur)
            keep = np.log(rng.uniform(size=n_occ)) < delta
            rows = np.nonzero(occ)[0][keep]
            state.atoms[rows, k] = prop[keep]
            acc += int(keep.sum())
            tot += n_occ
    else:
        s_ln = np.zeros(h)
        np.add.at(s_ln, state.z, y[:, 0])           # y holds log(data) here
        if n_occ:
            cur = state.atoms[occ]
            prop = cur * np.exp(step * rng.normal(size=n_occ))
            cur_t = counts[occ] * np.log(cur) - (cur + 1.0) * s_ln[occ] + _centering_logpdf(spec, state, cur)
            new_t = counts[occ] * np.log(prop) - (prop + 1.0) * s_ln[occ] + _centering_logpdf(spec, state, prop)
            delta = new_t - cur_t + np.log(prop) - np.log(cur)
            keep = np.log(rng.uniform(size=n_occ)) < delta
            rows = np.nonzero(occ)[0][keep]
            state.atoms[rows] = prop[keep]
            acc += int(keep.sum())
            tot += n_occ
    if h - n_occ:
        fresh = _draw_atoms(spec, state, rng, h - n_occ)
        if spec.is_scale:
            state.atoms[~occ] = fresh
        else:
            state.atoms[~occ] = np.ravel(fresh)
    _record(state, "atom", acc, tot)
    return state


def _erlang_cluster_loglik(sig, s_ln, s_y, n_h, lam):
    a = np.ceil(sig)
    rate = lam / sig
    return (a - 1.0) * s_ln - rate * s_y + n_h * (a * np.log(rate) - special.gammaln(a))


def update_alpha0(state, spec, rng):
    """Conjugate refresh of the centering tail index per margin.

    With a Jeffreys prior the conditional is Gamma(H*, T_k) with
    T_k = sum_h log(1 + atom_{k,h} / margin_scale_k) over every
    instantiated atom; a proper Gamma(a, b) prior shifts both arguments.
    A degenerate T (all atoms at zero) falls back to a Gamma(1, 1) draw,
    which is counted and logged.
    """
    if spec.is_scale:
        atoms2 = state.atoms
        scales = spec.margin_scale
    elif spec.shape_centering[0] == "pareto2":
        atoms2 = state.atoms[:, None]
        scales = (spec.margin_scale[0],)
    else:
        return state
    h = atoms2.shape[0]
    for k in range(len(scales)):
        t_k = float(np.log1p(atoms2[:, k] / scales[k]).sum())
        if not (t_k > 0.0 and np.isfinite(t_k)):
            logger.warning("degenerate alpha0 rate (T=%r); falling back to Gamma(1, 1)", t_k)
            state.alpha0_fallbacks += 1
            state.alpha0[k] = rng.gamma(1.0, 1.0)
            continue
        if spec.alpha0_prior == "jeffreys":
            state.alpha0[k] = rng.gamma(h, 1.0 / t_k)
        else:
            a, b = spec.alpha0_prior
            state.alpha0[k] = rng.gamma(a + h, 1.0 / (b + t_k))
    return state


def _discount_count_loglik(d, m, counts, n_gt):
    """Allocation log likelihood of the discount, sticks integrated out.

    The stick product factorizes as prod_h V_h**n_h (1-V_h)**n_{>h}, so
    integrating the Beta(1-d, m+hd) sticks gives a ratio of Beta
    functions per stick; sticks beyond the last occupied one contribute
    a factor of one.
    """
    occ = np.nonzero((counts > 0) | (n_gt > 0))[0]
    if occ.size == 0:
        return 0.0
    h = occ + 1.0
    a0 = 1.0 - d
    b0 = m + h * d
    return float(
        (
            special.betaln(a0 + counts[occ], b0 + n_gt[occ])
            - special.betaln(a0, b0)
        ).sum()
    )


def update_discount(state, spec, rng):
    """Logit-scale random walk on the discount, sticks collapsed out.

    Targets Beta prior times the closed-form allocation likelihood of
    the counts; the sticks are refreshed from their conjugate
    conditional immediately afterwards (see :func:`one_cycle` order).
    Collapsing breaks the discount/stick feedback loop near d -> 1 that
    otherwise traps the chain.
    """
    if not spec.discount_is_random:
        return state
    a_d, b_d = spec.discount_prior
    h = state.h_star
    counts = np.bincount(state.z, minlength=h).astype(float)
    n_gt = counts[::-1].cumsum()[::-1] - counts
    cur = state.discount
    step = state.steps["discount"]
    logit_new = math.log(cur / (1.0 - cur)) + step * rng.normal()
    new = 1.0 / (1.0 + math.exp(-np.clip(logit_new, -36.0, 36.0)))
    new = min(max(new, 1e-12), 1.0 - 1e-12)
    delta = (
        _discount_count_loglik(new, spec.precision, counts, n_gt)
        - _discount_count_loglik(cur, spec.precision, counts, n_gt)
        + (a_d - 1.0) * (math.log(new) - math.log(cur))
        + (b_d - 1.0) * (math.log1p(-new) - math.log1p(-cur))
        + math.log(new * (1.0 - new))
        - math.log(cur * (1.0 - cur))
    )
    ok = math.log(rng.uniform()) < delta
    if ok:
        state.discount = new
    _record(state, "discount", int(ok), 1)
    return state


def update_lambda(state, spec, y, rng):
    """Log-scale random walk on the Erlang rate divisor."""
    if not spec.is_scale:
        return state
    a_l, b_l = spec.lambda_prior
    sig = state.atoms[state.z]                      # (n, d)
    a_tot = float(np.ceil(sig).sum())
    b_tot = float((y / sig).sum()) if y.size else 0.0
    cur = state.lam
    step = state.steps["lambda"]
    new = cur * math.exp(step * rng.normal())
    dlog = math.log(new) - math.log(cur)
    delta = (
        a_tot * dlog - b_tot * (new - cur)
        + (a_l - 1.0) * dlog - b_l * (new - cur)
        + dlog
    )
    ok = math.log(rng.uniform()) < delta
    if ok:
        state.lam = new
    _record(state, "lambda", int(ok), 1)
    return state


def update_coefs(state, spec, x_mat, rng):
    """Componentwise random walk on the per-stick regression coefficients."""
    if spec.model_class != "cond_scale":
        return state
    var = spec.coef_prior_var
    step = state.steps["coef"]
    acc = tot = 0
    for h_idx in range(state.h_star):
        for j in range(spec.n_covariates):
            cand = state.coefs[h_idx].copy()
            cand[j] += step * rng.normal()
            new_col = _cond_v_column(spec, cand, state.stick_u[h_idx], h_idx + 1, x_mat)
            delta = (
                _stick_col_loglik(state, h_idx, new_col)
                - _stick_col_loglik(state, h_idx, state.cond_v[:, h_idx])
                + (state.coefs[h_idx, j] ** 2 - cand[j] ** 2) / (2.0 * var)
            )
            tot += 1
            if math.log(rng.uniform()) < delta:
                acc += 1
                state.coefs[h_idx] = cand
                state.cond_v[:, h_idx] = new_col
    _record(state, "coef", acc, tot)
    return state


def _record(state, name, acc, tot):
    slot = state.accepts.setdefault(name, [0, 0])
    slot[0] += acc
    slot[1] += tot
    state.accepts[f"_batch_{name}"] = (acc, tot)


# ---------------------------------------------------------------------------
# cycle and chain drivers


def one_cycle(state, spec, y, x_mat, rng, iteration=None, validate=False):
    """One full sweep over all conditionals.

    The discount move runs right before the stick refresh because it
    collapses the sticks out; every stick is then redrawn from its
    conditional under the new discount before anything reads it.
    """
    update_slices(state, spec, x_mat, rng, iteration)
    if validate:
        assert_slice_invariant(state, spec, iteration)
    update_allocations(state, spec, y, x_mat, rng, iteration)
    update_discount(state, spec, rng)
    update_sticks(state, spec, x_mat, rng, iteration)
    update_atoms(state, spec, y, rng)
    update_alpha0(state, spec, rng)
    update_lambda(state, spec, y, rng)
    update_coefs(state, spec, x_mat, rng)
    if validate:
        assert_slice_invariant(state, spec, iteration, coverage_only=True)
    return state


_TUNED = ("atom", "discount", "lambda", "coef", "stick")


def _tune(state, iteration, target):
    gain = (iteration + 1.0) ** -0.6
    for name in _TUNED:
        batch = state.accepts.get(f"_batch_{name}")
        if not batch or batch[1] == 0:
            continue
        rate = batch[0] / batch[1]
        state.steps[name] = float(
            np.clip(state.steps[name] * math.exp(gain * (rate - target)), 1e-3, 50.0)
        )


def run_chain(spec, y, config, rng, x=None, log_path=None):
    """Run one slice-sampler chain and collect thinned snapshots.

    Returns a :class:`ChainResult`; its ``summary`` is None (build one
    with :func:`heavymix.summaries.predictive_summaries`), snapshots are
    ordered by iteration, and ``acceptance`` maps update names to their
    post burn-in acceptance rates.  Deterministic given the generator.
    """
    spec = resolve_spec(spec, np.asarray(y, dtype=float))
    y2 = internal_data(spec, _as_data(spec, y))
    x_mat = _as_covariates(spec, x, y2.shape[0])
    state = init_state(spec, y2, rng, x=x, config=config, _internal=True)
    snapshots = []
    writer = chainlog.SnapshotWriter(log_path) if log_path else None
    try:
        total = config.burn_in + config.keep
        for it in range(total):
            one_cycle(state, spec, y2, x_mat, rng, iteration=it, validate=config.validate)
            if it < config.burn_in:
                if config.adapt:
                    _tune(state, it, config.target_accept)
                if it == config.burn_in - 1:
                    state.accepts = {}
            elif (it - config.burn_in) % config.thin == 0:
                snap = _snapshot(state, spec, it)
                snapshots.append(snap)
                if writer:
                    writer.write(snap)
    finally:
        if writer:
            writer.close()
    acceptance = {
        name: (cnt[0] / cnt[1] if cnt[1] else math.nan)
        for name, cnt in state.accepts.items()
        if not name.startswith("_batch_")
    }
    return ChainResult(
        spec=spec,
        snapshots=snapshots,
        summary=None,
        acceptance=acceptance,
        alpha0_fallbacks=state.alpha0_fallbacks,
    )


def _snapshot(state, spec, iteration):
    if spec.model_class == "cond_scale":
        return Snapshot(
            iteration=iteration,
            discount=math.nan,
            lam=state.lam,
            alpha0=state.alpha0.copy(),
            weights=None,
            residual=None,
            atoms=state.atoms.copy(),
            stick_u=state.stick_u.copy(),
            coefs=state.coefs.copy(),
        )
    w, resid = _stick_weights(state.v)
    return Snapshot(
        iteration=iteration,
        discount=state.discount,
        lam=state.lam,
        alpha0=state.alpha0.copy(),
        weights=w,
        residual=float(resid),
        atoms=state.atoms.copy(),
    )
