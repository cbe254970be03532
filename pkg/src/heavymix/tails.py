"""Tail envelopes and tail-index estimation.

Closed-form envelope functions bounding the almost-sure small-time
behavior of normalized subordinator tails, the lim-inf scaling constant
of the stable case, vectorized envelope curves for Dirichlet-process and
stable-process tails under a given centering, and the Hill estimator
used as the tail-index oracle throughout the package.

Envelope domain edges are excluded with a domain error rather than
clamped; the underlying statements hold on open ranges only.  Every
envelope is also available in log-survival coordinates (natural log),
which is the scale the curves are plotted and compared on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InputError, ParameterError

__all__ = [
    "TailIndexEstimate",
    "envelope_g_s",
    "envelope_h_r",
    "envelope_l",
    "envelope_u_r",
    "liminf_constant",
    "sp_envelopes",
    "dp_envelopes",
    "hill_estimate",
]


@dataclass(frozen=True)
class TailIndexEstimate:
    """Hill estimate together with the order statistics used."""

    estimate: float
    k: int
    n: int

    def __post_init__(self):
        if not (1 <= self.k < self.n):
            raise InputError(f"need 1 <= k < n, got k={self.k}, n={self.n}")


def _as_open_unit(t, upper=1.0, what="t"):
    t = np.asarray(t, dtype=float)
    bad = np.nonzero((t <= 0.0) | (t >= upper))[0]
    if bad.size:
        raise InputError(
            f"{what} must lie in (0, {upper:g}); first offending index {bad[0]} "
            f"(value {t.flat[bad[0]]!r})"
        )
    return t


def envelope_g_s(t, s, log=False):
    """Lower envelope factor exp{-s log|log t| / t} of the Dirichlet tail.

    Defined for t in (0, 1); ``s`` indexes the family, with s < 1 the
    regime quoted alongside the lower inequality.
    """
    t = _as_open_unit(t)
    if not (isinstance(s, (int, float)) and math.isfinite(s)):
        raise ParameterError(f"s must be a finite real, got {s!r}")
    lv = -s * np.log(np.abs(np.log(t))) / t
    return lv if log else np.exp(lv)


def envelope_h_r(t, r, log=False):
    """Upper envelope factor exp{-1 / (t |log t|**r)} of the Dirichlet tail."""
    t = _as_open_unit(t)
    if not r > 1.0:
        raise ParameterError(f"r must exceed 1, got {r!r}")
    lv = -1.0 / (t * np.abs(np.log(t)) ** r)
    return lv if log else np.exp(lv)


def envelope_l(t, d, log=False):
    """Lim-inf envelope t**(1/d) {log|log t|}**(1 - 1/d) of the stable tail.

    Valid on (0, e**-1), where log|log t| is positive.
    """
    _check_stable_index(d)
    t = _as_open_unit(t, upper=math.exp(-1.0))
    lv = np.log(t) / d + (1.0 - 1.0 / d) * np.log(np.log(np.abs(np.log(t))))
    return lv if log else np.exp(lv)


def envelope_u_r(t, d, r, log=False):
    """Lim-sup envelope t**(1/d) |log t|**(r/d) of the stable tail.

    Valid on (0, e**-r) with r > 1; nondecreasing there.
    """
    _check_stable_index(d)
    if not r > 1.0:
        raise ParameterError(f"r must exceed 1, got {r!r}")
    t = _as_open_unit(t, upper=math.exp(-r))
    lv = np.log(t) / d + (r / d) * np.log(np.abs(np.log(t)))
    return lv if log else np.exp(lv)


def liminf_constant(d):
    """Scaling constant d (1 - d)**((1 - d)/d) of the stable lim-inf law."""
    _check_stable_index(d)
    return d * (1.0 - d) ** ((1.0 - d) / d)


def _check_stable_index(d):
    if not (0.0 < d < 1.0):
        raise ParameterError(f"stability index must lie in (0, 1), got {d!r}")


def sp_envelopes(g0_tail, d, r, log=False):
    """Lower and upper envelope curves for a stable-process tail.

    ``g0_tail`` holds centering tail values t = 1 - G0(y); all must lie
    below e**-r so both curves are defined.  Returns ``(lower, upper)``.
    """
    t = np.asarray(g0_tail, dtype=float)
    lower = envelope_l(t, d, log=log)
    upper = envelope_u_r(t, d, r, log=log)
    return lower, upper


def dp_envelopes(g0_tail, m, s, r, log=False):
    """Lower and upper envelope curves for a Dirichlet-process tail.

    The envelope functions are evaluated at m * (1 - G0(y)), which must
    lie in (0, 1).  ``s < 1`` and ``r > 1``.  Returns ``(lower, upper)``.
    """
    if not m > 0:
        raise ParameterError(f"precision must be positive, got {m!r}")
    if not s < 1.0:
        raise ParameterError(f"s must be below 1, got {s!r}")
    t = np.asarray(g0_tail, dtype=float)
    mt = _as_open_unit(m * t, what="m * (1 - G0(y))")
    lower = envelope_g_s(mt, s, log=log)
    upper = envelope_h_r(mt, r, log=log)
    return lower, upper


def hill_estimate(samples, k):
    """Hill estimator of the tail index from the top ``k`` order statistics.

    estimate = k / sum_{i=1..k} log(X_(n-i+1) / X_(n-k)) with X_(1) <= ...
    <= X_(n).  Requires positive samples and 1 <= k < n.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if not (1 <= k < n):
        raise InputError(f"need 1 <= k < n, got k={k}, n={n}")
    if np.any(x <= 0.0) or not np.all(np.isfinite(x)):
        raise InputError("samples must be positive and finite")
    top = np.partition(x, n - k - 1)[n - k - 1 :]
    ref = top[0]
    denom = float(np.log(top[1:] / ref).sum())
    if denom <= 0.0:
        raise InputError("degenerate top order statistics (all equal)")
    return TailIndexEstimate(estimate=k / denom, k=int(k), n=int(n))
