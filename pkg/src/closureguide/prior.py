"""Spatial prior: a weighted Gaussian mixture fitted to a closure map.

The mixture is fitted by EM over pixel-center coordinates where each pixel
counts with its map value as weight. Components are then re-weighted by
mixing proportion, roundness and closeness to the image center, and summed
into a max-normalized prior map.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .raster import as_float_map

COMPONENT_HEADER = ["component_id", "mean_x", "mean_y", "cov_xx", "cov_xy", "cov_yy", "proportion", "omega"]


class DegeneratePriorWarning(UserWarning):
    """Every component weight vanished; the prior falls back to all ones."""


@dataclass(frozen=True)
class GmmComponent:
    mean: tuple  # (x, y) in pixels
    covariance: tuple  # ((xx, xy), (xy, yy)) in pixels^2
    proportion: float

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (2, 2) or not np.allclose(cov, cov.T):
            raise ValueError("covariance must be a symmetric 2x2 matrix")
        if np.linalg.eigvalsh(cov)[0] <= 0:
            raise ValueError("covariance must be positive definite")
        if not 0 < self.proportion <= 1:
            raise ValueError(f"proportion must be in (0, 1], got {self.proportion}")

    @property
    def cov(self):
        return np.asarray(self.covariance, dtype=float)

    @property
    def eigenvalues(self):
        """Covariance eigenvalues, ascending."""
        return np.linalg.eigvalsh(self.cov)


@dataclass(frozen=True)
class PriorParams:
    components: int = 5
    max_em_iters: int = 100
    loglik_rel_tol: float = 1e-6
    covariance_floor: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.components < 1:
            raise ValueError(f"components must be >= 1, got {self.components}")
        if self.max_em_iters < 1:
            raise ValueError(f"max_em_iters must be >= 1, got {self.max_em_iters}")
        if not self.loglik_rel_tol > 0 or not self.covariance_floor > 0:
            raise ValueError("loglik_rel_tol and covariance_floor must be positive")


def _log_gauss(points, mean, cov):
    # closed-form 2x2 inverse; points is (n, 2)
    dx = points[:, 0] - mean[0]
    dy = points[:, 1] - mean[1]
    a, b, c = cov[0, 0], cov[0, 1], cov[1, 1]
    det = a * c - b * b
    maha = (c * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det
    return -0.5 * maha - 0.5 * math.log(det) - math.log(2.0 * math.pi)


def _floor_eigen(cov, floor):
    vals, vecs = np.linalg.eigh(cov)
    vals = np.maximum(vals, floor)
    out = (vecs * vals) @ vecs.T
    return 0.5 * (out + out.T)


def _initial_means(points, weights, k, rng):
    """Greedy max-min-distance picks among the heaviest 1% of pixels."""
    n_cand = min(len(points), max(k, math.ceil(0.01 * len(points))))
    order = np.argsort(-weights, kind="stable")[:n_cand]
    cand = points[order]
    chosen = [int(rng.integers(n_cand))]
    min_d = np.sum((cand - cand[chosen[0]]) ** 2, axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(min_d))
        if min_d[nxt] == 0:
            break
        chosen.append(nxt)
        min_d = np.minimum(min_d, np.sum((cand - cand[nxt]) ** 2, axis=1))
    return cand[chosen]


def fit_gmm_trace(weights, params=None):
    """Run weighted EM and return ``(components, loglik_history)``.

    ``loglik_history[i]`` is the weighted log-likelihood (weights scaled to
    sum to one) of the parameters entering iteration ``i``, plus a final
    entry for the returned parameters.
    """
    params = params or PriorParams()
    wmap = as_float_map(weights, "weights")
    if wmap.min() < 0:
        raise ValueError("weights must be non-negative")
    if not np.any(wmap > 0):
        raise ValueError("no mass to fit")
    h, w = wmap.shape
    rows, cols = np.nonzero(wmap > 0)
    points = np.column_stack([cols + 0.5, rows + 0.5])
    wts = wmap[rows, cols]
    wts = wts / wts.sum()

    rng = np.random.default_rng(params.rng_seed)
    means = _initial_means(points, wts, params.components, rng)
    k = len(means)
    if k < params.components:
        warnings.warn(
            f"only {k} distinct positive pixels; fitting {k} components instead of {params.components}",
            RuntimeWarning,
            stacklevel=2,
        )
    init_var = max((min(w, h) / 8.0) ** 2, params.covariance_floor)
    covs = [np.eye(2) * init_var for _ in range(k)]
    props = np.full(k, 1.0 / k)

    px, py = points[:, 0], points[:, 1]

    def e_step(means, covs, props):
        # component-major layout keeps the per-pixel reductions vectorised
        logp = np.empty((len(props), len(points)))
        for j in range(len(props)):
            logp[j] = math.log(props[j]) + _log_gauss(points, means[j], covs[j])
        top = logp.max(axis=0)
        logp -= top
        np.exp(logp, out=logp)
        total = logp.sum(axis=0)
        logp /= total
        return logp, float(np.dot(wts, top + np.log(total)))

    history = []
    resp, ll = e_step(means, covs, props)
    history.append(ll)
    for _ in range(params.max_em_iters):
        wr = resp * wts
        nk = wr.sum(axis=1)
        alive = nk > 1e-12
        if not alive.all():
            wr, nk = wr[alive], nk[alive]
        props = nk / nk.sum()
        means = (wr @ points) / nk[:, None]
        covs = []
        for j in range(len(nk)):
            dx = px - means[j, 0]
            dy = py - means[j, 1]
            wdx = wr[j] * dx
            sxx = np.dot(wdx, dx) / nk[j]
            sxy = np.dot(wdx, dy) / nk[j]
            syy = np.dot(wr[j] * dy, dy) / nk[j]
            cov = np.array([[sxx, sxy], [sxy, syy]])
            covs.append(_floor_eigen(cov, params.covariance_floor))
        resp, ll_new = e_step(means, covs, props)
        history.append(ll_new)
        converged = abs(ll_new - ll) < params.loglik_rel_tol * max(abs(ll), 1e-300)
        ll = ll_new
        if converged:
            break

    order = np.lexsort((means[:, 1], means[:, 0], -props))
    components = [
        GmmComponent(
            mean=(float(means[j, 0]), float(means[j, 1])),
            covariance=((float(covs[j][0, 0]), float(covs[j][0, 1])), (float(covs[j][1, 0]), float(covs[j][1, 1]))),
            proportion=float(props[j]),
        )
        for j in order
    ]
    return components, history


def fit_gmm(weights, params=None):
    """Fit a Gaussian mixture to a non-negative weight map (e.g. a closure map).

    Initial means are picked greedily (farthest point first) among the top 1%
    heaviest pixels, starting from a seeded random pick; initial covariances
    are isotropic with standard deviation ``min(W, H) / 8``. Covariance
    eigenvalues are floored at ``covariance_floor`` after every M-step.
    Components are returned by decreasing proportion.
    """
    return fit_gmm_trace(weights, params)[0]


def component_weights(components, width, height):
    """Per-component weight: proportion x roundness x centrality.

    Roundness is the covariance eigenvalue ratio ``min/max``; centrality is
    ``1 - d / d_max`` (clamped at 0) for the distance ``d`` of the mean to the
    image center and the half-diagonal ``d_max``.
    """
    cx, cy = width / 2.0, height / 2.0
    d_max = math.hypot(width, height) / 2.0
    out = []
    for comp in components:
        lo, hi = comp.eigenvalues
        ellip = lo / hi
        dist = math.hypot(comp.mean[0] - cx, comp.mean[1] - cy)
        dis = max(0.0, 1.0 - dist / d_max)
        out.append(comp.proportion * ellip * dis)
    return out


def gaussian_density(component, width, height):
    """Bivariate normal density of one component at every pixel center."""
    ys, xs = np.mgrid[0:height, 0:width]
    points = np.column_stack([xs.ravel() + 0.5, ys.ravel() + 0.5])
    logp = _log_gauss(points, np.asarray(component.mean), component.cov)
    return np.exp(logp).reshape(height, width)


def prior_map(components, weights, width, height):
    """Weighted sum of component densities, scaled so the maximum is 1.

    When every weight is zero (or the sum underflows) the prior carries no
    information; a map of ones is returned and a DegeneratePriorWarning is
    issued so the combined saliency is left unchanged.
    """
    if len(components) != len(weights):
        raise ValueError("components and weights must have the same length")
    total = np.zeros((height, width))
    for comp, wt in zip(components, weights):
        if wt > 0:
            total += wt * gaussian_density(comp, width, height)
    peak = total.max()
    if not peak > 0:
        warnings.warn("all prior component weights are zero; using a uniform prior", DegeneratePriorWarning, stacklevel=2)
        return np.ones((height, width))
    return total / peak


def component_rows(components, weights):
    for i, (comp, wt) in enumerate(zip(components, weights)):
        (xx, xy), (_, yy) = comp.covariance
        yield i, comp.mean[0], comp.mean[1], xx, xy, yy, comp.proportion, wt
