"""Mixture model specifications and finite-truncation evaluation.

Four model classes are supported:

* ``uni_scale``   -- univariate Erlang scale mixture, stable-process or
                     Dirichlet-process mixing, Pareto Type II centering.
* ``uni_shape``   -- univariate mixture over the tail index of a
                     Pareto-type kernel with a gamma or Pareto Type II
                     centering.
* ``multi_scale`` -- conditionally independent Erlang margins sharing
                     stick weights; copula-coupled Pareto II centering.
* ``cond_scale``  -- multi_scale with covariate-indexed stick weights
                     through per-stick logistic discounts.

A spec is declarative: it fixes kernel, centering, mixing, and priors.
``FiniteMixture`` holds one concrete truncated realization (weights,
atoms, kernel hyperparameters) and the functions below evaluate its
density, per-margin survival, and tail-index functionals.  Weights are
renormalized over the active components at evaluation time, so a
truncated draw always integrates to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

from .distributions import erlang_log_density, erlang_survival, pareto_type_kernel
from .exceptions import InputError, ParameterError

__all__ = [
    "MODEL_CLASSES",
    "MixtureModelSpec",
    "FiniteMixture",
    "density",
    "log_density",
    "log_survival",
    "model_tail_index",
    "induced_tail_prior_mean",
    "dependent_weights",
    "logistic_discount",
]

MODEL_CLASSES = ("uni_scale", "uni_shape", "multi_scale", "cond_scale")
_SCALE_CLASSES = ("uni_scale", "multi_scale", "cond_scale")

# logistic arguments are clamped here to keep exp() finite
ETA_CLAMP = 30.0


@dataclass(frozen=True)
class MixtureModelSpec:
    """Declarative description of one heavy-tailed mixture model.

    Use the classmethod constructors rather than filling fields by hand;
    they enforce the per-class invariants (stable mixing forces zero
    precision, Dirichlet mixing forces zero discount, the conditional
    class needs covariates, ...).
    """

    model_class: str
    dim: int = 1
    mixing: str = "sp"  # "sp" (precision 0, random discount) or "dp" (discount 0)
    precision: float = 0.0
    discount_fixed: float | None = None
    discount_prior: tuple[float, float] = (0.5, 0.5)
    alpha0_prior: tuple[float, float] | str = "jeffreys"
    margin_scale: tuple[float, ...] = (1.0,)
    lambda_prior: tuple[float, float] = (0.1, 0.1)
    copula_theta: float | None = None  # None: estimate from data at fit time
    shape_kernel: str = "pareto"
    shape_centering: tuple = ("gamma", 1.0, 1.0)
    n_covariates: int = 0
    coef_prior_var: float = 100.0
    truncation_eps: float = 1e-4

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def uni_scale(cls, mixing="sp", precision=0.0, discount_prior=(0.5, 0.5),
                  discount_fixed=None, alpha0_prior="jeffreys", margin_scale=1.0,
                  lambda_prior=(0.1, 0.1)):
        return cls(
            model_class="uni_scale", dim=1, mixing=mixing, precision=precision,
            discount_prior=tuple(discount_prior), discount_fixed=discount_fixed,
            alpha0_prior=_check_alpha0_prior(alpha0_prior),
            margin_scale=(float(margin_scale),), lambda_prior=tuple(lambda_prior),
        )._validated()

    @classmethod
    def uni_shape(cls, kernel="pareto", centering=("gamma", 1.0, 1.0),
                  precision=1.0, discount_prior=(0.5, 0.5), discount_fixed=None,
                  margin_scale=1.0):
        return cls(
            model_class="uni_shape", dim=1, mixing="pyp", precision=precision,
            discount_prior=tuple(discount_prior), discount_fixed=discount_fixed,
            shape_kernel=kernel, shape_centering=tuple(centering),
            alpha0_prior="jeffreys", margin_scale=(float(margin_scale),),
        )._validated()

    @classmethod
    def multi_scale(cls, dim=2, mixing="sp", precision=0.0,
                    discount_prior=(0.5, 0.5), discount_fixed=None,
                    alpha0_prior="jeffreys", margin_scale=1.0,
                    lambda_prior=(0.1, 0.1), copula_theta=None):
        return cls(
            model_class="multi_scale", dim=int(dim), mixing=mixing,
            precision=precision, discount_prior=tuple(discount_prior),
            discount_fixed=discount_fixed,
            alpha0_prior=_check_alpha0_prior(alpha0_prior),
            margin_scale=_margin_tuple(margin_scale, dim),
            lambda_prior=tuple(lambda_prior), copula_theta=copula_theta,
        )._validated()

    @classmethod
    def cond_scale(cls, dim=2, n_covariates=1, coef_prior_var=100.0,
                   alpha0_prior="jeffreys", margin_scale=1.0,
                   lambda_prior=(0.1, 0.1), copula_theta=None):
        return cls(
            model_class="cond_scale", dim=int(dim), mixing="sp", precision=0.0,
            alpha0_prior=_check_alpha0_prior(alpha0_prior),
            margin_scale=_margin_tuple(margin_scale, dim),
            lambda_prior=tuple(lambda_prior), copula_theta=copula_theta,
            n_covariates=int(n_covariates), coef_prior_var=float(coef_prior_var),
        )._validated()

    # ------------------------------------------------------------------

    def _validated(self):
        if self.model_class not in MODEL_CLASSES:
            raise ParameterError(f"unknown model class {self.model_class!r}")
        if self.dim < 1:
            raise ParameterError("dimension must be at least 1")
        if self.model_class.startswith("uni") and self.dim != 1:
            raise ParameterError("univariate classes require dim = 1")
        if self.model_class in _SCALE_CLASSES:
            if self.mixing not in ("sp", "dp"):
                raise ParameterError("scale classes use 'sp' or 'dp' mixing")
            if self.mixing == "sp" and self.precision != 0.0:
                raise ParameterError("stable-process mixing requires precision 0")
            if self.mixing == "dp":
                if self.discount_fixed not in (0, 0.0):
                    raise ParameterError("Dirichlet mixing requires discount fixed at 0")
                if not self.precision > 0:
                    raise ParameterError("Dirichlet mixing requires positive precision")
        else:
            if not self.precision > -1.0:
                raise ParameterError("shape-class precision must exceed -discount")
            if self.shape_kernel != "pareto":
                raise ParameterError("only the Pareto shape kernel is supported")
            if self.shape_centering[0] not in ("gamma", "pareto2"):
                raise ParameterError("shape centering must be 'gamma' or 'pareto2'")
        if self.discount_fixed is not None and not (0.0 <= self.discount_fixed < 1.0):
            raise ParameterError("fixed discount must lie in [0, 1)")
        a_d, b_d = self.discount_prior
        if a_d <= 0 or b_d <= 0:
            raise ParameterError("discount prior hyperparameters must be positive")
        if any(b <= 0 for b in self.margin_scale):
            raise ParameterError("margin scales must be positive")
        if len(self.margin_scale) != self.dim:
            raise ParameterError("need one margin scale per dimension")
        a_l, b_l = self.lambda_prior
        if a_l <= 0 or b_l <= 0:
            raise ParameterError("lambda prior hyperparameters must be positive")
        if self.copula_theta is not None and self.copula_theta < 1.0:
            raise ParameterError("copula parameter must be at least 1")
        if self.model_class == "cond_scale":
            if self.n_covariates < 1:
                raise ParameterError("conditional class needs at least one covariate")
            if self.coef_prior_var <= 0:
                raise ParameterError("coefficient prior variance must be positive")
        if not (0.0 < self.truncation_eps < 1.0):
            raise ParameterError("truncation epsilon must lie in (0, 1)")
        return self

    @property
    def is_scale(self):
        return self.model_class in _SCALE_CLASSES

    @property
    def discount_is_random(self):
        return self.discount_fixed is None and self.model_class != "cond_scale"

    def shape_centering_dist(self, alpha0=None):
        """Centering distribution of the shape-class atoms.

        The Pareto II variant is parameterized by the sampled centering
        tail index ``alpha0`` (scale from ``margin_scale``); the gamma
        variant carries fixed hyperparameters.
        """
        from .distributions import ParetoII

        kind = self.shape_centering[0]
        if kind == "gamma":
            _, a, b = self.shape_centering
            return _GammaCentering(float(a), float(b))
        if alpha0 is None:
            raise InputError("Pareto II shape centering needs the current alpha0")
        return ParetoII(alpha=float(alpha0), scale=self.margin_scale[0])

    # ------------------------------------------------------------------
    # flat-text config round trip (used by the CLI)

    def to_config(self):
        cfg = {
            "model_class": self.model_class,
            "dim": str(self.dim),
            "mixing": self.mixing,
            "precision": repr(self.precision),
            "discount_fixed": "" if self.discount_fixed is None else repr(self.discount_fixed),
            "discount_prior": f"{self.discount_prior[0]!r},{self.discount_prior[1]!r}",
            "alpha0_prior": (
                "jeffreys" if self.alpha0_prior == "jeffreys"
                else f"{self.alpha0_prior[0]!r},{self.alpha0_prior[1]!r}"
            ),
            "margin_scale": ",".join(repr(b) for b in self.margin_scale),
            "lambda_prior": f"{self.lambda_prior[0]!r},{self.lambda_prior[1]!r}",
            "copula_theta": "" if self.copula_theta is None else repr(self.copula_theta),
            "shape_kernel": self.shape_kernel,
            "shape_centering": ",".join(str(x) for x in self.shape_centering),
            "n_covariates": str(self.n_covariates),
            "coef_prior_var": repr(self.coef_prior_var),
            "truncation_eps": repr(self.truncation_eps),
        }
        return cfg

    @classmethod
    def from_config(cls, cfg):
        known = {
            "model_class", "dim", "mixing", "precision", "discount_fixed",
            "discount_prior", "alpha0_prior", "margin_scale", "lambda_prior",
            "copula_theta", "shape_kernel", "shape_centering", "n_covariates",
            "coef_prior_var", "truncation_eps",
        }
        unknown = set(cfg) - known
        if unknown:
            raise InputError(f"unknown model config keys: {sorted(unknown)}")
        get = cfg.get

        def pair(key, default):
            raw = get(key)
            if raw is None or raw == "":
                return default
            a, b = raw.split(",")
            return (float(a), float(b))

        alpha0 = get("alpha0_prior", "jeffreys")
        if alpha0 != "jeffreys":
            a, b = alpha0.split(",")
            alpha0 = (float(a), float(b))
        centering_raw = get("shape_centering", "gamma,1.0,1.0").split(",")
        centering = (centering_raw[0], *[float(x) for x in centering_raw[1:]])
        margin_raw = get("margin_scale", "1.0")
        spec = cls(
            model_class=get("model_class", "uni_scale"),
            dim=int(get("dim", "1")),
            mixing=get("mixing", "sp"),
            precision=float(get("precision", "0.0") or 0.0),
            discount_fixed=(None if get("discount_fixed", "") in ("", None)
                            else float(cfg["discount_fixed"])),
            discount_prior=pair("discount_prior", (0.5, 0.5)),
            alpha0_prior=alpha0,
            margin_scale=tuple(float(x) for x in margin_raw.split(",")),
            lambda_prior=pair("lambda_prior", (0.1, 0.1)),
            copula_theta=(None if get("copula_theta", "") in ("", None)
                          else float(cfg["copula_theta"])),
            shape_kernel=get("shape_kernel", "pareto"),
            shape_centering=centering,
            n_covariates=int(get("n_covariates", "0")),
            coef_prior_var=float(get("coef_prior_var", "100.0")),
            truncation_eps=float(get("truncation_eps", "1e-4")),
        )
        return spec._validated()


@dataclass(frozen=True)
class _GammaCentering:
    """Gamma centering for shape-class atoms; support left endpoint 0."""

    a: float
    b: float  # rate

    support_left = 0.0

    def logpdf(self, y):
        y = np.asarray(y, dtype=float)
        return (
            self.a * math.log(self.b)
            + (self.a - 1.0) * np.log(y)
            - self.b * y
            - special.gammaln(self.a)
        )

    def sample(self, rng, size=None):
        return rng.gamma(self.a, 1.0 / self.b, size=size)


def _check_alpha0_prior(p):
    if p == "jeffreys":
        return p
    a, b = p
    if a <= 0 or b <= 0:
        raise ParameterError("alpha0 prior hyperparameters must be positive")
    return (float(a), float(b))


def _margin_tuple(margin_scale, dim):
    if np.isscalar(margin_scale):
        return tuple([float(margin_scale)] * int(dim))
    return tuple(float(b) for b in margin_scale)


# ---------------------------------------------------------------------------
# finite truncations


@dataclass(frozen=True)
class FiniteMixture:
    """One truncated mixture realization.

    ``weights`` has shape (H,); ``atoms`` is (H, d) of scale atoms for
    scale classes or (H,) of tail-index atoms for the shape class.
    ``lam`` is the Erlang rate divisor (scale classes only).  For the
    conditional class, build per-covariate weights with
    :func:`dependent_weights` and pass them explicitly.
    """

    weights: np.ndarray
    atoms: np.ndarray
    lam: float | None = None
    kernel: str = "erlang"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise InputError("weights must be a nonempty vector")
        if np.any(w < 0) or w.sum() > 1.0 + 1e-9:
            raise InputError("weights must be nonnegative with sum at most 1")
        if self.kernel == "erlang" and (self.lam is None or self.lam <= 0):
            raise InputError("Erlang mixtures need a positive rate divisor")


def _scale_atoms_2d(fm):
    atoms = np.asarray(fm.atoms, dtype=float)
    if atoms.ndim == 1:
        atoms = atoms[:, None]
    return atoms


def log_density(spec, fm, y, x=None, weights=None):
    """Log density of a finite mixture at one point ``y`` (length-d).

    ``x`` is required exactly for the conditional class unless explicit
    per-point ``weights`` are supplied.  Weights are renormalized over
    the active components.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (spec.dim,):
        raise InputError(f"expected a point of dimension {spec.dim}, got shape {y.shape}")
    w = _resolve_weights(spec, fm, x, weights)
    logw = np.log(w) - math.log(w.sum())
    if spec.is_scale:
        if np.any(y <= 0.0):
            raise InputError("Erlang mixtures live on positive values")
        sig = _scale_atoms_2d(fm)
        shapes = np.ceil(sig)
        ll = erlang_log_density(y[None, :], shapes, sig / fm.lam).sum(axis=1)
    else:
        kern = pareto_type_kernel(spec.shape_kernel, 1.0)
        if y[0] <= kern.support[0]:
            raise InputError(f"shape-kernel support starts at {kern.support[0]}")
        alphas = np.asarray(fm.atoms, dtype=float)
        ll = np.log(alphas) - (alphas + 1.0) * math.log(y[0])
    return float(special.logsumexp(logw + ll))


def density(spec, fm, y, x=None, weights=None):
    """Density of a finite mixture at one point; see :func:`log_density`."""
    return math.exp(log_density(spec, fm, y, x=x, weights=weights))


def log_survival(spec, fm, y_grid, x=None, weights=None):
    """Per-margin log survival of the mixture along an increasing grid.

    Returns shape (len(grid),) for univariate models and (d, len(grid))
    otherwise.  Mixture survival per margin k is
    sum_h w_h * S_kernel(y; atom_{k,h}).
    """
    grid = np.asarray(y_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InputError("grid must be a nonempty vector")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise InputError("grid must be strictly increasing")
    w = _resolve_weights(spec, fm, x, weights)
    w = w / w.sum()
    if spec.is_scale:
        sig = _scale_atoms_2d(fm)
        shapes = np.ceil(sig)
        out = np.empty((sig.shape[1], grid.size))
        for k in range(sig.shape[1]):
            surv = erlang_survival(grid[None, :], shapes[:, k, None], (sig[:, k] / fm.lam)[:, None])
            out[k] = np.log(w @ surv)
    else:
        alphas = np.asarray(fm.atoms, dtype=float)
        surv = np.minimum(np.maximum(grid[None, :], 1.0) ** (-alphas[:, None]), 1.0)
        out = np.log(w @ surv)[None, :]
    return out[0] if spec.dim == 1 else out


def _resolve_weights(spec, fm, x, weights):
    if weights is not None:
        return np.asarray(weights, dtype=float)
    if spec.model_class == "cond_scale":
        raise InputError("conditional mixtures need per-point weights (pass x-resolved weights)")
    if x is not None:
        raise InputError("covariates are only meaningful for the conditional class")
    return np.asarray(fm.weights, dtype=float)


# ---------------------------------------------------------------------------
# tail functionals


def model_tail_index(spec, alpha0=None, discount=None):
    """Analytic tail index of the mixture given resolved hyperparameters.

    Scale classes: alpha0_k / discount per margin (requires both values).
    Shape class: left endpoint of the centering support.
    """
    if spec.is_scale:
        if alpha0 is None or discount is None:
            raise InputError("scale-class tail index needs concrete alpha0 and discount")
        if not 0.0 < discount < 1.0:
            raise ParameterError("tail index requires discount in (0, 1)")
        a = np.atleast_1d(np.asarray(alpha0, dtype=float))
        if np.any(a <= 0.0):
            raise ParameterError("alpha0 must be positive")
        out = a / discount
        return float(out[0]) if spec.dim == 1 else out
    left = spec.shape_centering_dist().support_left
    return float(left)


def induced_tail_prior_mean(a_alpha0, b_alpha0, a_d, b_d):
    """Prior mean of alpha0 / discount under Gamma and Beta hyperpriors.

    Equals a_alpha0 (a_d + b_d - 1) / {b_alpha0 (a_d - 1)}; infinite when
    a_d <= 1 (the Jeffreys-style Beta(0.5, 0.5) case).
    """
    for name, v in (("a_alpha0", a_alpha0), ("b_alpha0", b_alpha0), ("a_d", a_d), ("b_d", b_d)):
        if v <= 0:
            raise ParameterError(f"{name} must be positive, got {v!r}")
    if a_d <= 1.0:
        return math.inf
    return a_alpha0 * (a_d + b_d - 1.0) / (b_alpha0 * (a_d - 1.0))


# ---------------------------------------------------------------------------
# covariate-dependent stick weights


def logistic_discount(coefs, x):
    """Per-stick discounts logistic(x' beta_h), clamped at +/- ETA_CLAMP."""
    coefs = np.asarray(coefs, dtype=float)
    x = np.asarray(x, dtype=float)
    eta = np.clip(coefs @ x, -ETA_CLAMP, ETA_CLAMP)
    return special.expit(eta)


def dependent_weights(coefs, x, stick_uniforms):
    """Stick weights at covariate ``x`` from shared stick uniforms.

    Each stick fraction is the Beta(1 - D_h(x), h D_h(x)) quantile of the
    shared uniform U_h, with D_h(x) = logistic(x' beta_h).  Sharing one
    uniform per stick across covariate values gives weights that vary
    continuously in x.  Returns ``(weights, residual)``.
    """
    u = np.asarray(stick_uniforms, dtype=float)
    coefs = np.asarray(coefs, dtype=float)
    if coefs.ndim != 2 or coefs.shape[0] != u.shape[0]:
        raise InputError("need one coefficient row per stick uniform")
    if np.any((u <= 0.0) | (u >= 1.0)):
        raise InputError("stick uniforms must lie strictly inside (0, 1)")
    h = np.arange(1, u.size + 1, dtype=float)
    d = logistic_discount(coefs, x)
    v = special.betaincinv(1.0 - d, h * d, u)
    v = np.clip(v, 1e-300, 1.0 - 1e-16)
    compl = np.cumprod(1.0 - v)
    w = v.copy()
    w[1:] *= compl[:-1]
    return w, float(compl[-1])
