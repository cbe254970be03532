"""Posterior predictive summaries and residual diagnostics.

Everything here is a pure function of the kept snapshots: pointwise
posterior means with 50%/95% credible bands for density and log-survival
curves, joint density grids for two-dimensional fits, tail-index
posterior draws, posterior-mean cdfs and their quantiles, and randomized
quantile residuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .exceptions import InputError
from .models import dependent_weights, logistic_discount
from .diagnostics import effective_sample_size

__all__ = [
    "CurveBand",
    "PosteriorSummary",
    "predictive_summaries",
    "posterior_mean_cdf",
    "posterior_mean_quantile",
    "tail_index_draws",
    "randomized_quantile_residuals",
]


@dataclass(frozen=True)
class CurveBand:
    """Pointwise posterior mean with nested 50% and 95% bands."""

    grid: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    lower50: np.ndarray
    upper50: np.ndarray

    @classmethod
    def from_draws(cls, grid, draws):
        qs = np.percentile(draws, [2.5, 97.5, 25.0, 75.0], axis=0)
        return cls(
            grid=np.asarray(grid, dtype=float),
            mean=draws.mean(axis=0),
            lower=qs[0],
            upper=qs[1],
            lower50=qs[2],
            upper50=qs[3],
        )


@dataclass(frozen=True)
class PosteriorSummary:
    """Grid summaries of one fitted chain.

    ``density`` is present for univariate fits; ``log_survival`` holds
    one band per margin; ``density2d`` is the posterior-mean joint
    density over a tensor grid for two-dimensional fits; ``conditional``
    maps covariate rows to per-margin curve summaries for the
    covariate-dependent class.
    """

    log_survival: tuple
    density: CurveBand | None = None
    density2d: tuple | None = None
    tail_index: np.ndarray | None = None
    acceptance: dict = field(default_factory=dict)
    ess: dict = field(default_factory=dict)
    conditional: tuple | None = None


def _snapshot_weights(snap, x=None):
    """Renormalized active weights of one snapshot (at covariate x if given)."""
    if snap.weights is not None:
        w = snap.weights
    else:
        if x is None:
            raise InputError("conditional snapshots need a covariate to resolve weights")
        w, _ = dependent_weights(snap.coefs, x, snap.stick_u)
    return w / w.sum()


def _margin_logpdf_matrix(grid, atoms_k, lam):
    a = np.ceil(atoms_k)
    scale = atoms_k / lam
    return (
        (a[None, :] - 1.0) * np.log(grid)[:, None]
        - grid[:, None] / scale[None, :]
        - a[None, :] * np.log(scale)[None, :]
        - special.gammaln(a)[None, :]
    )


def _margin_survival_matrix(grid, atoms_k, lam, spec):
    if spec.is_scale:
        a = np.ceil(atoms_k)
        return special.gammaincc(a[None, :], grid[:, None] * lam / atoms_k[None, :])
    return np.minimum(np.maximum(grid[:, None], 1.0) ** (-atoms_k[None, :]), 1.0)


def _margin_cdf_matrix(grid, atoms_k, lam, spec):
    return 1.0 - _margin_survival_matrix(grid, atoms_k, lam, spec)


def _snapshot_margin_density(snap, spec, grid, k, w):
    if spec.is_scale:
        lp = _margin_logpdf_matrix(grid, snap.atoms[:, k], snap.lam)
        return np.exp(lp) @ w
    alpha = snap.atoms
    pdf = np.where(
        grid[:, None] > 1.0,
        alpha[None, :] * np.maximum(grid[:, None], 1.0 + 1e-12) ** (-(alpha[None, :] + 1.0)),
        0.0,
    )
    return pdf @ w


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InputError("grids must be nonempty 1-d arrays")
    if grid.size > 1 and np.any(np.diff(grid) <= 0.0):
        raise InputError("grids must be strictly increasing")
    return grid


def tail_index_draws(snapshots, spec, x=None):
    """Posterior draws of the per-margin tail index alpha0_k / discount.

    Defined for stable-process scale mixtures.  For the conditional
    class the leading-stick discount at covariate ``x`` stands in for
    the discount, documenting the heaviest locally active component.
    Returns None for Dirichlet mixing and for the shape class (whose
    tail index is the constant centering left endpoint).
    """
    if not spec.is_scale or spec.mixing != "sp":
        return None
    if spec.model_class == "cond_scale":
        if x is None:
            return None
        out = np.empty((len(snapshots), spec.dim))
        for i, snap in enumerate(snapshots):
            d1 = float(logistic_discount(snap.coefs[:1], np.asarray(x, float))[0])
            out[i] = snap.alpha0 / d1
        return out
    return np.array([snap.alpha0 / snap.discount for snap in snapshots])


def predictive_summaries(snapshots, spec, y_grid, x_grid=None, grid2=None):
    """Pointwise predictive curves with credible bands from kept snapshots.

    ``y_grid`` is the (increasing) evaluation grid shared by every
    margin.  For two-dimensional fits ``grid2`` optionally sets a second
    margin grid and the posterior-mean joint density over the tensor
    grid is included.  For the conditional class pass ``x_grid`` (one
    covariate row per entry); each entry gets its own curve summaries.
    """
    if not snapshots:
        raise InputError("no snapshots to summarize")
    grid = _check_grid(y_grid)
    if spec.model_class == "cond_scale":
        if x_grid is None:
            raise InputError("conditional summaries need x_grid")
        conditional = []
        for x in np.atleast_2d(np.asarray(x_grid, dtype=float)):
            conditional.append((x, _summary_at(snapshots, spec, grid, grid2, x=x)))
        base = conditional[0][1]
        return PosteriorSummary(
            log_survival=base.log_survival,
            density=base.density,
            density2d=base.density2d,
            tail_index=tail_index_draws(snapshots, spec, x=conditional[0][0]),
            conditional=tuple(conditional),
        )
    return _summary_at(snapshots, spec, grid, grid2)


def _summary_at(snapshots, spec, grid, grid2, x=None):
    k_draws = len(snapshots)
    m = grid.size
    d = spec.dim
    grids = [grid] * d
    if d == 2 and grid2 is not None:
        grids[1] = _check_grid(grid2)
    dens = np.empty((k_draws, m)) if d == 1 else None
    surv = [np.empty((k_draws, g.size)) for g in grids]
    dens2 = np.zeros((grids[0].size, grids[1].size)) if d == 2 else None
    for i, snap in enumerate(snapshots):
        w = _snapshot_weights(snap, x=x)
        for k in range(d):
            sv = _margin_survival_matrix(grids[k], _atoms_col(snap, spec, k), snap.lam, spec) @ w
            surv[k][i] = np.log(np.maximum(sv, 1e-300))
        if d == 1:
            dens[i] = _snapshot_margin_density(snap, spec, grids[0], 0, w)
        elif dens2 is not None:
            p1 = np.exp(_margin_logpdf_matrix(grids[0], snap.atoms[:, 0], snap.lam))
            p2 = np.exp(_margin_logpdf_matrix(grids[1], snap.atoms[:, 1], snap.lam))
            dens2 += np.einsum("ih,jh,h->ij", p1, p2, w)
    summary = PosteriorSummary(
        log_survival=tuple(CurveBand.from_draws(g, s) for g, s in zip(grids, surv)),
        density=CurveBand.from_draws(grids[0], dens) if d == 1 else None,
        density2d=(grids[0], grids[1], dens2 / k_draws) if d == 2 else None,
        tail_index=tail_index_draws(snapshots, spec, x=x),
    )
    return summary


def _atoms_col(snap, spec, k):
    return snap.atoms[:, k] if spec.is_scale else snap.atoms


def posterior_mean_cdf(snapshots, spec, points, x=None, margin=0):
    """Posterior-mean mixture cdf of one margin at arbitrary points."""
    if not snapshots:
        raise InputError("no snapshots")
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    acc = np.zeros(pts.size)
    for snap in snapshots:
        w = _snapshot_weights(snap, x=x)
        acc += _margin_cdf_matrix(pts, _atoms_col(snap, spec, margin), snap.lam, spec) @ w
    return acc / len(snapshots)


def posterior_mean_quantile(snapshots, spec, prob, x=None, margin=0,
                            bracket=(1e-6, 1e9)):
    """Quantile of the posterior-mean cdf by monotone bisection."""
    if not (0.0 < prob < 1.0):
        raise InputError("prob must lie in (0, 1)")
    lo, hi = bracket
    f_hi = posterior_mean_cdf(snapshots, spec, [hi], x=x, margin=margin)[0]
    if f_hi < prob:
        return math.inf
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if posterior_mean_cdf(snapshots, spec, [mid], x=x, margin=margin)[0] < prob:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-10:
            break
    return math.sqrt(lo * hi)


def randomized_quantile_residuals(snapshots, spec, y, rng, x=None):
    """Normal-quantile residuals through the posterior-mean mixture cdf.

    r_i = ndtri(F(y_i)) per margin, with F the posterior-mean cdf.
    Values that hit 0 or 1 numerically are clamped into
    [1e-10, 1 - 1e-10] with a uniform jitter inside the clamp band (the
    randomized part) and flagged.  Returns ``(residuals, clamped)`` with
    matching shapes: (n,) univariate, (n, d) otherwise.
    """
    y2 = np.asarray(y, dtype=float)
    if y2.ndim == 1:
        y2 = y2[:, None]
    if y2.shape[1] != spec.dim:
        raise InputError(f"data must have {spec.dim} columns")
    res = np.empty_like(y2)
    clamped = np.zeros(y2.shape, dtype=bool)
    for k in range(spec.dim):
        f = posterior_mean_cdf(snapshots, spec, y2[:, k], x=x, margin=k)
        low = f < 1e-10
        high = f > 1.0 - 1e-10
        clamped[:, k] = low | high
        if low.any():
            f[low] = rng.uniform(1e-10, 1e-9, size=int(low.sum()))
        if high.any():
            f[high] = 1.0 - rng.uniform(1e-10, 1e-9, size=int(high.sum()))
        res[:, k] = special.ndtri(f)
    if spec.dim == 1:
        return res[:, 0], clamped[:, 0]
    return res, clamped


def attach_diagnostics(summary, result, series=None):
    """Return a summary copy carrying acceptance rates and ESS values.

    ``series`` maps names to scalar chains (defaults to the tail-index
    draws when available).
    """
    series = dict(series or {})
    if summary.tail_index is not None and "tail_index_0" not in series:
        for k in range(summary.tail_index.shape[1]):
            series[f"tail_index_{k}"] = summary.tail_index[:, k]
    ess = {name: effective_sample_size(vals) for name, vals in series.items()}
    return PosteriorSummary(
        log_survival=summary.log_survival,
        density=summary.density,
        density2d=summary.density2d,
        tail_index=summary.tail_index,
        acceptance=dict(result.acceptance),
        ess=ess,
        conditional=summary.conditional,
    )
