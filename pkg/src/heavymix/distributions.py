"""Parametric building blocks.

Erlang kernel, Pareto Type II centering margins, the log-gamma family
used by the simulation-study generators, the Gumbel copula, and the
heavy-tailed (Pareto-type) kernel families with their closed-form tail
indices.  Densities, cdfs, survivals, quantiles, and samplers are exact;
samplers take an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .exceptions import InputError, ParameterError
from .measures import sample_positive_stable

__all__ = [
    "Erlang",
    "ParetoII",
    "LogGamma",
    "GumbelCopula",
    "Burr",
    "FKernel",
    "GeneralizedPareto",
    "ParetoKernel",
    "StudentTKernel",
    "pareto_type_kernel",
    "tail_index_of_kernel",
    "copula_centering_sample",
    "erlang_log_density",
    "erlang_survival",
]


def _require(cond, msg):
    if not cond:
        raise ParameterError(msg)


def _pos_array(y, what="y", strict=True):
    y = np.asarray(y, dtype=float)
    if strict and np.any(y <= 0.0):
        raise InputError(f"{what} must be positive")
    return y


# ---------------------------------------------------------------------------
# Erlang kernel


def erlang_log_density(y, shape, scale):
    """Vectorized Erlang log density with float (integer-valued) shapes.

    Broadcasts over ``y``, ``shape``, ``scale``; shapes may be huge, so
    they stay floats and the log-factorial goes through ``gammaln``.
    """
    y = np.asarray(y, dtype=float)
    shape = np.asarray(shape, dtype=float)
    scale = np.asarray(scale, dtype=float)
    return (
        (shape - 1.0) * np.log(y)
        - y / scale
        - shape * np.log(scale)
        - special.gammaln(shape)
    )


def erlang_survival(y, shape, scale):
    """Vectorized Erlang survival via the upper regularized gamma function."""
    return special.gammaincc(np.asarray(shape, float), np.asarray(y, float) / scale)


@dataclass(frozen=True)
class Erlang:
    """Erlang distribution: gamma with integer shape ``a`` and scale ``b``."""

    a: int
    b: float

    def __post_init__(self):
        _require(float(self.a).is_integer() and self.a >= 1, f"shape must be an integer >= 1, got {self.a!r}")
        _require(self.b > 0, f"scale must be positive, got {self.b!r}")

    def logpdf(self, y):
        return erlang_log_density(_pos_array(y), float(self.a), self.b)

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def cdf(self, y):
        return special.gammainc(float(self.a), _pos_array(y, strict=False) / self.b)

    def survival(self, y):
        return special.gammaincc(float(self.a), _pos_array(y, strict=False) / self.b)

    def quantile(self, p):
        p = _check_prob(p)
        return self.b * special.gammaincinv(float(self.a), p)

    def sample(self, rng, size=None):
        return rng.gamma(float(self.a), self.b, size=size)


# ---------------------------------------------------------------------------
# Pareto Type II centering margin


@dataclass(frozen=True)
class ParetoII:
    """Pareto Type II on [0, inf): survival (1 + y/scale)**(-alpha)."""

    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        _require(self.alpha > 0, f"tail index must be positive, got {self.alpha!r}")
        _require(self.scale > 0, f"scale must be positive, got {self.scale!r}")

    def logpdf(self, y):
        y = _pos_array(y, strict=False)
        if np.any(y < 0.0):
            raise InputError("support is [0, inf)")
        return (
            math.log(self.alpha)
            - math.log(self.scale)
            - (self.alpha + 1.0) * np.log1p(y / self.scale)
        )

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        return -np.expm1(-self.alpha * np.log1p(np.maximum(y, 0.0) / self.scale))

    def survival(self, y):
        return 1.0 - self.cdf(y)

    def quantile(self, p):
        p = _check_prob(p)
        return self.scale * np.expm1(-np.log1p(-p) / self.alpha)

    def sample(self, rng, size=None):
        return self.scale * np.expm1(rng.standard_exponential(size=size) / self.alpha)

    @property
    def tail_index(self):
        return self.alpha


# ---------------------------------------------------------------------------
# log-gamma


@dataclass(frozen=True)
class LogGamma:
    """exp of a Gamma(a, rate b) variate; support (1, inf), tail index b."""

    a: float
    b: float

    def __post_init__(self):
        _require(self.a > 0, f"shape must be positive, got {self.a!r}")
        _require(self.b > 0, f"rate must be positive, got {self.b!r}")

    def logpdf(self, y):
        y = np.asarray(y, dtype=float)
        out = np.full(y.shape, -np.inf)
        ok = y > 1.0
        ly = np.log(y, where=ok, out=np.ones_like(y))
        out = np.where(
            ok,
            self.a * math.log(self.b)
            + (self.a - 1.0) * np.log(ly)
            - (self.b + 1.0) * np.log(y, where=ok, out=np.zeros_like(y))
            - special.gammaln(self.a),
            -np.inf,
        )
        return out

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y <= 1.0, 0.0, special.gammainc(self.a, self.b * np.log(np.maximum(y, 1.0))))

    def survival(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y <= 1.0, 1.0, special.gammaincc(self.a, self.b * np.log(np.maximum(y, 1.0))))

    def quantile(self, p):
        p = _check_prob(p)
        return np.exp(special.gammaincinv(self.a, p) / self.b)

    def sample(self, rng, size=None):
        return np.exp(rng.gamma(self.a, 1.0 / self.b, size=size))

    @property
    def tail_index(self):
        return self.b


# ---------------------------------------------------------------------------
# Gumbel copula


@dataclass(frozen=True)
class GumbelCopula:
    """Bivariate Gumbel copula; theta = 1 is the independence copula."""

    theta: float

    def __post_init__(self):
        _require(self.theta >= 1.0, f"theta must be at least 1, got {self.theta!r}")

    @property
    def kendall_tau(self):
        return 1.0 - 1.0 / self.theta

    def cdf(self, u, v):
        u, v = _check_unit_pair(u, v)
        if self.theta == 1.0:
            return u * v
        a = (-np.log(u)) ** self.theta + (-np.log(v)) ** self.theta
        return np.exp(-(a ** (1.0 / self.theta)))

    def logpdf(self, u, v):
        u, v = _check_unit_pair(u, v)
        th = self.theta
        if th == 1.0:
            return np.zeros(np.broadcast(u, v).shape)
        lu, lv = -np.log(u), -np.log(v)
        a = (lu**th + lv**th) ** (1.0 / th)
        return (
            -a
            + (th - 1.0) * (np.log(lu) + np.log(lv))
            + (1.0 - 2.0 * th) * np.log(a)
            + np.log(a + th - 1.0)
            - np.log(u)
            - np.log(v)
        )

    def pdf(self, u, v):
        return np.exp(self.logpdf(u, v))

    def sample(self, rng, size):
        """Uniform pairs via the positive-stable frailty construction."""
        if self.theta == 1.0:
            return rng.uniform(size=(size, 2))
        s = sample_positive_stable(1.0 / self.theta, rng, size=size)
        e = rng.standard_exponential(size=(size, 2))
        u = np.exp(-((e / s[:, None]) ** (1.0 / self.theta)))
        return np.clip(u, 1e-300, 1.0 - 1e-16)


def copula_centering_sample(copula, margins, rng, size=None):
    """Dependent positive vectors: copula uniforms through margin quantiles.

    ``margins`` is a sequence of ParetoII margins.  Dependence is only
    supported for two margins; more margins require theta = 1.
    """
    d = len(margins)
    if d != 2 and copula.theta != 1.0:
        raise InputError("copula dependence is only supported for two margins")
    n = 1 if size is None else int(size)
    if copula.theta == 1.0:
        u = rng.uniform(size=(n, d))
    else:
        u = copula.sample(rng, n)
    out = np.column_stack([m.quantile(u[:, k]) for k, m in enumerate(margins)])
    return out[0] if size is None else out


# ---------------------------------------------------------------------------
# Pareto-type kernel families


@dataclass(frozen=True)
class Burr:
    """Burr (type XII) kernel: density c a y**(c-1) (1 + y**c)**-(a+1), y > 0."""

    c: float
    a: float

    def __post_init__(self):
        _require(self.c > 0 and self.a > 0, "Burr parameters must be positive")

    support = (0.0, math.inf)

    def logpdf(self, y):
        y = _pos_array(y)
        return (
            math.log(self.c)
            + math.log(self.a)
            + (self.c - 1.0) * np.log(y)
            - (self.a + 1.0) * np.log1p(y**self.c)
        )

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def survival(self, y):
        y = np.asarray(y, dtype=float)
        return np.exp(-self.a * np.log1p(np.maximum(y, 0.0) ** self.c))

    def cdf(self, y):
        return 1.0 - self.survival(y)

    def quantile(self, p):
        p = _check_prob(p)
        return np.expm1(-np.log1p(-p) / self.a) ** (1.0 / self.c)

    def sample(self, rng, size=None):
        return self.quantile(rng.uniform(size=size))

    @property
    def tail_index(self):
        return self.c * self.a


@dataclass(frozen=True)
class FKernel:
    """Kernel density proportional to y**(a/2-1) (a + b y)**(-(a+b)/2), y > 0.

    A rescaled beta-prime law; the normalizing constant is
    a**(b/2) b**(a/2) / B(a/2, b/2) and the tail index is b/2.
    """

    a: float
    b: float

    def __post_init__(self):
        _require(self.a > 0 and self.b > 0, "degrees of freedom must be positive")

    support = (0.0, math.inf)

    def logpdf(self, y):
        y = _pos_array(y)
        a, b = self.a, self.b
        return (
            0.5 * b * math.log(a)
            + 0.5 * a * math.log(b)
            - special.betaln(a / 2.0, b / 2.0)
            + (a / 2.0 - 1.0) * np.log(y)
            - 0.5 * (a + b) * np.log(a + b * y)
        )

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        x = self.b * np.maximum(y, 0.0) / self.a
        return special.betainc(self.a / 2.0, self.b / 2.0, x / (1.0 + x))

    def survival(self, y):
        return 1.0 - self.cdf(y)

    def quantile(self, p):
        p = _check_prob(p)
        w = special.betaincinv(self.a / 2.0, self.b / 2.0, p)
        return (self.a / self.b) * w / (1.0 - w)

    def sample(self, rng, size=None):
        g1 = rng.gamma(self.a / 2.0, size=size)
        g2 = rng.gamma(self.b / 2.0, size=size)
        return (self.a / self.b) * g1 / g2

    @property
    def tail_index(self):
        return self.b / 2.0


@dataclass(frozen=True)
class GeneralizedPareto:
    """Heavy-tailed generalized Pareto: shape xi > 0, survival (1 + xi y / sigma)**(-1/xi).

    Parameterized directly by a positive shape so the tail index is the
    unambiguous 1/xi.
    """

    xi: float
    sigma: float = 1.0

    def __post_init__(self):
        _require(self.xi > 0, f"shape must be positive, got {self.xi!r}")
        _require(self.sigma > 0, f"scale must be positive, got {self.sigma!r}")

    support = (0.0, math.inf)

    def logpdf(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < 0.0):
            raise InputError("support is [0, inf)")
        return -math.log(self.sigma) - (1.0 / self.xi + 1.0) * np.log1p(self.xi * y / self.sigma)

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def survival(self, y):
        y = np.asarray(y, dtype=float)
        return np.exp(-np.log1p(self.xi * np.maximum(y, 0.0) / self.sigma) / self.xi)

    def cdf(self, y):
        return 1.0 - self.survival(y)

    def quantile(self, p):
        p = _check_prob(p)
        return self.sigma * np.expm1(-self.xi * np.log1p(-p)) / self.xi

    def sample(self, rng, size=None):
        return self.sigma * np.expm1(self.xi * rng.standard_exponential(size=size)) / self.xi

    @property
    def tail_index(self):
        return 1.0 / self.xi


@dataclass(frozen=True)
class ParetoKernel:
    """Standard Pareto kernel on (1, inf): density a y**-(a+1)."""

    a: float

    def __post_init__(self):
        _require(self.a > 0, f"tail index must be positive, got {self.a!r}")

    support = (1.0, math.inf)

    def logpdf(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y <= 1.0):
            raise InputError("support is (1, inf)")
        return math.log(self.a) - (self.a + 1.0) * np.log(y)

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def survival(self, y):
        y = np.asarray(y, dtype=float)
        return np.minimum(np.maximum(y, 1.0) ** (-self.a), 1.0)

    def cdf(self, y):
        return 1.0 - self.survival(y)

    def quantile(self, p):
        p = _check_prob(p)
        return np.exp(-np.log1p(-p) / self.a)

    def sample(self, rng, size=None):
        return np.exp(rng.standard_exponential(size=size) / self.a)

    @property
    def tail_index(self):
        return self.a


@dataclass(frozen=True)
class StudentTKernel:
    """Student-t kernel on the real line with ``a`` degrees of freedom."""

    a: float

    def __post_init__(self):
        _require(self.a > 0, f"degrees of freedom must be positive, got {self.a!r}")

    support = (-math.inf, math.inf)

    def logpdf(self, y):
        y = np.asarray(y, dtype=float)
        a = self.a
        return (
            special.gammaln((a + 1.0) / 2.0)
            - special.gammaln(a / 2.0)
            - 0.5 * math.log(a * math.pi)
            - 0.5 * (a + 1.0) * np.log1p(y**2 / a)
        )

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def cdf(self, y):
        return special.stdtr(self.a, np.asarray(y, dtype=float))

    def survival(self, y):
        return special.stdtr(self.a, -np.asarray(y, dtype=float))

    def quantile(self, p):
        p = _check_prob(p)
        return special.stdtrit(self.a, p)

    def sample(self, rng, size=None):
        return rng.standard_t(self.a, size=size)

    @property
    def tail_index(self):
        return self.a


_KERNEL_FAMILIES = {
    "burr": Burr,
    "f": FKernel,
    "gpd": GeneralizedPareto,
    "pareto": ParetoKernel,
    "student_t": StudentTKernel,
}


def pareto_type_kernel(family, *args, **kwargs):
    """Construct a Pareto-type kernel by family name."""
    try:
        cls = _KERNEL_FAMILIES[family]
    except KeyError:
        raise ParameterError(
            f"unknown kernel family {family!r}; choose from {sorted(_KERNEL_FAMILIES)}"
        ) from None
    return cls(*args, **kwargs)


def tail_index_of_kernel(kernel):
    """Closed-form tail index of a Pareto-type kernel instance."""
    return kernel.tail_index


def _check_prob(p):
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise InputError("probabilities must lie strictly inside (0, 1)")
    return p


def _check_unit_pair(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any((u <= 0.0) | (u >= 1.0)) or np.any((v <= 0.0) | (v >= 1.0)):
        raise InputError("copula arguments must lie strictly inside (0, 1)^2")
    return u, v
