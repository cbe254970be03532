"""Random measures of the Pitman-Yor family.

Stick-breaking draws, positive stable variates, gamma and stable
subordinator paths, and single-path trajectories of the random tail
``1 - G(y)`` built from the subordinator representations of the
Dirichlet process and of the stable law process.

All samplers take an explicit ``numpy.random.Generator``; nothing in
this module carries hidden state, so paths can be drawn in parallel
with independently seeded generators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InputError, ParameterError

__all__ = [
    "PyParams",
    "RandomMeasureDraw",
    "SubordinatorSpec",
    "SubordinatorPath",
    "draw_stick_fractions",
    "stick_weights_from_fractions",
    "draw_stick_weights",
    "draw_random_measure",
    "resample_atoms",
    "expected_residual_mass",
    "choose_truncation",
    "sample_positive_stable",
    "log_gamma_variate",
    "subordinator_path",
    "sp_tail_trajectory",
    "dp_tail_trajectory",
]


@dataclass(frozen=True)
class PyParams:
    """Discount/precision pair of a Pitman-Yor random measure.

    The stick fractions are ``V_h ~ Beta(1 - discount, precision + h * discount)``
    for ``h = 1, 2, ...``.  ``discount = 0`` gives the Dirichlet process,
    ``precision = 0`` the stable law process.  Both zero would be a
    degenerate (single atom) measure and is rejected.
    """

    discount: float = 0.0
    precision: float = 0.0

    def __post_init__(self):
        d, m = self.discount, self.precision
        if not (0.0 <= d < 1.0) or not math.isfinite(d):
            raise ParameterError(f"discount must lie in [0, 1), got {d!r}")
        if not (m > -d) or not math.isfinite(m):
            raise ParameterError(f"precision must exceed -discount, got {m!r}")
        if d == 0.0 and m == 0.0:
            raise ParameterError("discount and precision cannot both be zero")

    def stick_beta_params(self, h):
        """Beta parameters ``(a, b)`` of the h-th stick fraction, ``h >= 1``."""
        h = np.asarray(h)
        return 1.0 - self.discount, self.precision + h * self.discount


@dataclass(frozen=True)
class RandomMeasureDraw:
    """Truncated realization of a discrete random probability measure.

    ``weights`` follow the stick-breaking order (not sorted) and
    ``sum(weights) + residual_mass == 1`` up to float round-off.
    ``atoms`` is None when only the weights were requested, else an
    array of shape ``(H,)`` or ``(H, d)``.
    """

    weights: np.ndarray
    residual_mass: float
    atoms: np.ndarray | None = None


@dataclass(frozen=True)
class SubordinatorSpec:
    """Driftless, unkilled subordinator of gamma or stable kind.

    ``index`` is the total-mass scale M for the gamma kind (value at
    time t is Gamma(M * t, 1)) and the stability exponent D in (0, 1)
    for the stable kind.
    """

    kind: str
    index: float
    killing_rate: float = 0.0
    drift: float = 0.0

    def __post_init__(self):
        if self.kind not in ("gamma", "stable"):
            raise ParameterError(f"kind must be 'gamma' or 'stable', got {self.kind!r}")
        if self.killing_rate != 0.0 or self.drift != 0.0:
            raise ParameterError("only killing_rate = drift = 0 is supported")
        if self.kind == "gamma" and not self.index > 0:
            raise ParameterError(f"gamma kind needs index > 0, got {self.index!r}")
        if self.kind == "stable" and not (0.0 < self.index < 1.0):
            raise ParameterError(f"stable kind needs index in (0, 1), got {self.index!r}")


@dataclass(frozen=True)
class SubordinatorPath:
    """A nondecreasing sample path evaluated on a grid in [0, 1]."""

    grid: np.ndarray
    values: np.ndarray


def draw_stick_fractions(params, h, rng):
    """Draw the first ``h`` stick fractions V_1, ..., V_h.

    Fractions are clipped away from exactly 0 and 1 so downstream log
    densities stay finite; the clip width (1e-300 / 1e-16) is far below
    any statistical resolution.
    """
    if h < 1:
        raise InputError(f"need at least one stick, got h={h}")
    a, b = params.stick_beta_params(np.arange(1, h + 1))
    v = rng.beta(np.full(h, a), b)
    return np.clip(v, 1e-300, 1.0 - 1e-16)


def stick_weights_from_fractions(v):
    """Map stick fractions to weights: pi_h = V_h * prod_{k<h}(1 - V_k).

    Returns ``(weights, residual)`` with ``residual = prod_h (1 - V_h)``.
    This is the deterministic half of the stick-breaking construction and
    doubles as a test hook (feed fixed fractions).
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise InputError("stick fractions must be a nonempty 1-d array")
    if np.any((v <= 0.0) | (v >= 1.0)):
        raise InputError("stick fractions must lie strictly inside (0, 1)")
    compl = np.cumprod(1.0 - v)
    w = v.copy()
    w[1:] *= compl[:-1]
    return w, float(compl[-1])


def draw_stick_weights(params, h, rng):
    """Draw ``h`` stick-breaking weights of a PYP(discount, precision) measure."""
    v = draw_stick_fractions(params, h, rng)
    w, resid = stick_weights_from_fractions(v)
    return RandomMeasureDraw(weights=w, residual_mass=resid)


def draw_random_measure(params, h, centering_sampler, rng):
    """Draw weights plus atoms, with atoms i.i.d. from the centering.

    ``centering_sampler(rng, size)`` must return ``size`` atoms as an
    array of shape ``(size,)`` or ``(size, d)``.
    """
    draw = draw_stick_weights(params, h, rng)
    atoms = np.asarray(centering_sampler(rng, h))
    if atoms.shape[0] != h:
        raise InputError("centering sampler returned wrong number of atoms")
    return RandomMeasureDraw(weights=draw.weights, residual_mass=draw.residual_mass, atoms=atoms)


def resample_atoms(draw, size, rng):
    """Sample ``size`` points from a measure draw (atoms picked by weight).

    Weights are renormalized over the truncation, so the residual mass is
    redistributed proportionally.
    """
    if draw.atoms is None:
        raise InputError("measure draw has no atoms to resample")
    p = draw.weights / draw.weights.sum()
    idx = rng.choice(draw.weights.size, size=size, p=p)
    return draw.atoms[idx]


def expected_residual_mass(params, h):
    """Expected mass beyond truncation level ``h``.

    E prod_{k<=h}(1 - V_k) = prod_{k=1}^{h} (M + kD) / (M + kD + 1 - D).
    """
    if h < 1:
        raise InputError(f"need h >= 1, got {h}")
    k = np.arange(1, h + 1)
    num = params.precision + k * params.discount
    return float(np.exp(np.sum(np.log(num) - np.log(num + 1.0 - params.discount))))


def choose_truncation(params, eps=1e-4, h_max=10_000_000):
    """Smallest truncation H with expected residual mass <= ``eps``."""
    if not (0.0 < eps < 1.0):
        raise InputError(f"eps must lie in (0, 1), got {eps}")
    log_eps = math.log(eps)
    total = 0.0
    h = 0
    block = 1024
    while h < h_max:
        k = np.arange(h + 1, min(h + block, h_max) + 1)
        num = params.precision + k * params.discount
        logs = np.cumsum(np.log(num) - np.log(num + 1.0 - params.discount)) + total
        hit = np.nonzero(logs <= log_eps)[0]
        if hit.size:
            return int(k[hit[0]])
        total = logs[-1]
        h = int(k[-1])
        block *= 2
    raise InputError(f"truncation above h_max={h_max} needed for eps={eps}")


def sample_positive_stable(d, rng, size=None):
    """Positive stable variate(s) with Laplace transform exp(-lambda**d).

    Uses the Kanter transform of a uniform on (0, pi) and a unit
    exponential; exact and O(1) per draw.
    """
    if not (0.0 < d < 1.0):
        raise ParameterError(f"stability index must lie in (0, 1), got {d!r}")
    u = rng.uniform(0.0, math.pi, size=size)
    e = rng.standard_exponential(size=size)
    log_a = (
        d * np.log(np.sin(d * u))
        + (1.0 - d) * np.log(np.sin((1.0 - d) * u))
        - np.log(np.sin(u))
    ) / (1.0 - d)
    return np.exp((1.0 - d) / d * (log_a - np.log(e)))


def log_gamma_variate(shape, rng, size=None):
    """log of a Gamma(shape, 1) draw, stable for arbitrarily small shapes.

    Uses Gamma(a) = Gamma(a + 1) * U**(1/a) so the log never underflows
    even when the linear-scale draw would round to zero.
    """
    shape = np.asarray(shape, dtype=float)
    if np.any(shape <= 0.0):
        raise ParameterError("gamma shape must be positive")
    if size is None:
        size = shape.shape if shape.shape else None
    g = rng.gamma(shape + 1.0, size=size)
    u = rng.uniform(size=size)
    return np.log(g) + np.log(u) / shape


def _check_tail_grid(g0_tail):
    t = np.asarray(g0_tail, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise InputError("tail grid must be a nonempty 1-d array")
    if np.any((t <= 0.0) | (t >= 1.0)):
        raise InputError("tail values 1 - G0(y) must lie strictly inside (0, 1)")
    if t.size > 1 and np.any(np.diff(t) >= 0.0):
        raise InputError("tail values must be strictly decreasing along the y grid")
    return t


def subordinator_path(spec, grid, rng):
    """Sample a subordinator on an increasing grid inside [0, 1].

    Increments over disjoint intervals are independent; the gamma kind
    adds Gamma(index * dt, 1) increments, the stable kind adds
    dt**(1/index) times an independent positive stable variate.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InputError("grid must be a nonempty 1-d array")
    if np.any(grid < 0.0) or np.any(grid > 1.0):
        raise InputError("grid must lie within [0, 1]")
    if grid.size > 1 and np.any(np.diff(grid) <= 0.0):
        raise InputError("grid must be strictly increasing")

    steps = np.diff(np.concatenate([[0.0], grid]))
    positive = steps > 0.0
    inc = np.zeros_like(steps)
    n_pos = int(positive.sum())
    if n_pos:
        dt = steps[positive]
        if spec.kind == "gamma":
            inc[positive] = np.exp(log_gamma_variate(spec.index * dt, rng))
        else:
            inc[positive] = dt ** (1.0 / spec.index) * sample_positive_stable(
                spec.index, rng, size=n_pos
            )
    return SubordinatorPath(grid=grid, values=np.cumsum(inc))


def sp_tail_trajectory(d, g0_tail, rng, log=False, return_normalizer=False):
    """One realization of the random tail 1 - G(y) of a stable law process.

    ``g0_tail`` holds the centering tail values t_j = 1 - G0(y_j) on an
    increasing y grid (so t is strictly decreasing).  The trajectory is
    S(t_j) / S(1) with all evaluations on a single path of a d-stable
    subordinator, hence nonincreasing along the y grid.

    With ``log=True`` the natural log of the trajectory is returned.
    ``return_normalizer=True`` additionally returns S(1), the path's own
    normalizing total mass.
    """
    if not (0.0 < d < 1.0):
        raise ParameterError(f"stability index must lie in (0, 1), got {d!r}")
    t = _check_tail_grid(g0_tail)
    ts = t[::-1]
    steps = np.diff(np.concatenate([[0.0], ts]))
    inc = steps ** (1.0 / d) * sample_positive_stable(d, rng, size=ts.size)
    s_vals = np.cumsum(inc)
    s_one = s_vals[-1] + (1.0 - ts[-1]) ** (1.0 / d) * sample_positive_stable(d, rng)
    vals = (s_vals / s_one)[::-1]
    out = np.log(vals) if log else vals
    if return_normalizer:
        return out, float(s_one)
    return out


def dp_tail_trajectory(m, g0_tail, rng, log=False):
    """One realization of 1 - G(y) for a Dirichlet process via a gamma path.

    Computed as gamma_rev(M * t_j) / gamma_rev(M) where gamma_rev is the
    time-reversed gamma process, all on one path.  Increments are drawn
    in log space, so tails far below the float underflow threshold are
    still meaningful when ``log=True``.
    """
    if not m > 0:
        raise ParameterError(f"precision must be positive, got {m!r}")
    t = _check_tail_grid(g0_tail)
    ts = t[::-1]
    u_grid = m * ts
    steps = np.diff(np.concatenate([[0.0], u_grid]))
    log_inc = log_gamma_variate(steps, rng)
    log_s = np.logaddexp.accumulate(log_inc)
    log_rest = log_gamma_variate(np.asarray(m - u_grid[-1]), rng)
    log_s_one = np.logaddexp(log_s[-1], log_rest)
    log_vals = (log_s - log_s_one)[::-1]
    return log_vals if log else np.exp(log_vals)
