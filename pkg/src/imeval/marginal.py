"""Marginal realism/diversity metrics over embedding sets.

Two families:

* Fréchet distance between Gaussians fitted to the real and generated
  embeddings (quality + diversity in one number).
* k-NN manifold membership metrics: precision and density (realism),
  recall and coverage (diversity).

Distances are Euclidean in feature space. All pairwise work is computed
from elementwise differences in float64, blocked over rows (and chunked
over the feature axis) so memory stays bounded at large N while exact
duplicate points still produce exact zero distances. Results are bitwise
independent of the blocking because every (i, j) pair's reduction only
depends on that pair's feature vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import EmbeddingSet
from .errors import InsufficientSamples, NumericalError, ShapeError

DEFAULT_K = 3

# Internal tiling constants. Row blocks bound the distance-tile size to
# O(block^2); the feature axis is accumulated in fixed chunks so a tile
# never materializes block^2 * D floats. Both only affect memory, never
# values, except that feature chunking fixes the summation grouping for
# d > _DIM_CHUNK (still deterministic, just a pinned order).
_ROW_BLOCK = 256
_DIM_CHUNK = 256

# Eigenvalues of a PSD matrix may come out slightly negative; anything in
# [-RTOL * lambda_max, 0) is rounding noise and clamped to zero. More
# negative means the input was not PSD and we refuse to continue.
_EIG_CLAMP_RTOL = 1e-10


@dataclass(frozen=True)
class GaussianMoments:
    """Fitted mean/covariance of one embedding distribution."""

    mean: np.ndarray
    cov: np.ndarray
    n: int


@dataclass(frozen=True)
class ManifoldModel:
    """Support points plus the k-th-neighbor ball radius at each point."""

    support: EmbeddingSet
    radii: np.ndarray
    k: int


@dataclass(frozen=True)
class PrdcResult:
    precision: float
    recall: float
    density: float
    coverage: float

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "density": self.density,
            "coverage": self.coverage,
        }


def _as_set(embeddings) -> EmbeddingSet:
    if isinstance(embeddings, EmbeddingSet):
        return embeddings
    return EmbeddingSet(np.asarray(embeddings))


def fit_gaussian(embeddings) -> GaussianMoments:
    """Column means and unbiased (n-1 divisor) covariance, symmetrized."""
    x = _as_set(embeddings).data
    n = x.shape[0]
    if n < 2:
        raise InsufficientSamples(f"need at least 2 rows to fit a Gaussian, got {n}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2.0
    return GaussianMoments(mean=mean, cov=cov, n=n)


def _eigh_with_ridge(mat: np.ndarray):
    try:
        return np.linalg.eigh(mat)
    except np.linalg.LinAlgError:
        d = mat.shape[0]
        ridge = 1e-12 * max(float(np.trace(mat)) / d, 1.0)
        try:
            return np.linalg.eigh(mat + ridge * np.eye(d))
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"eigendecomposition failed after regularization: {exc}") from exc


def _clamped_eigvals(vals: np.ndarray, context: str) -> np.ndarray:
    lam_max = float(vals.max(initial=0.0))
    tol = _EIG_CLAMP_RTOL * max(lam_max, 0.0)
    low = float(vals.min(initial=0.0))
    if low < -tol:
        raise NumericalError(f"{context}: eigenvalue {low} below clamp tolerance {-tol}")
    return np.clip(vals, 0.0, None)


def _sqrt_psd(mat: np.ndarray, context: str) -> np.ndarray:
    vals, vecs = _eigh_with_ridge(mat)
    vals = _clamped_eigvals(vals, context)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_distance(a: GaussianMoments, b: GaussianMoments) -> float:
    """Squared Fréchet distance between two Gaussians.

    ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2),
    with the inner square root taken by eigendecomposition of the
    symmetrized product, which keeps the arithmetic real where the naive
    sqrtm(S_a S_b) can wander into complex values.
    """
    if a.mean.shape != b.mean.shape or a.cov.shape != b.cov.shape:
        raise ShapeError(
            f"moment dimension mismatch: {a.mean.shape}/{a.cov.shape} vs {b.mean.shape}/{b.cov.shape}"
        )
    diff = a.mean - b.mean
    sqrt_a = _sqrt_psd(a.cov, "covariance square root")
    inner = sqrt_a @ b.cov @ sqrt_a
    inner = (inner + inner.T) / 2.0
    vals, _ = _eigh_with_ridge(inner)
    vals = _clamped_eigvals(vals, "cross-covariance square root")
    tr_sqrt = float(np.sqrt(vals).sum())
    value = float(diff @ diff) + float(np.trace(a.cov)) + float(np.trace(b.cov)) - 2.0 * tr_sqrt
    return max(value, 0.0)


def _block_sq_dists(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between row blocks via elementwise
    differences, accumulating the feature axis in fixed chunks."""
    d = x.shape[1]
    if d <= _DIM_CHUNK:
        return ((x[:, None, :] - y[None, :, :]) ** 2).sum(axis=2)
    out = np.zeros((x.shape[0], y.shape[0]), dtype=np.float64)
    for c0 in range(0, d, _DIM_CHUNK):
        c1 = min(c0 + _DIM_CHUNK, d)
        out += ((x[:, None, c0:c1] - y[None, :, c0:c1]) ** 2).sum(axis=2)
    return out


def knn_radii(embeddings: EmbeddingSet, k: int = DEFAULT_K) -> np.ndarray:
    """Distance from each row to its k-th nearest other row (self excluded).

    The radius is the k-th order statistic of the distances, so ties at
    the k-th neighbor need no index-based tie-breaking.
    """
    if k < 1:
        raise ShapeError(f"k must be >= 1, got {k}")
    x = _as_set(embeddings).data
    n = x.shape[0]
    if n <= k:
        raise InsufficientSamples(f"need at least k+1={k + 1} rows for k-NN radii, got {n}")
    radii = np.empty(n, dtype=np.float64)
    for r0 in range(0, n, _ROW_BLOCK):
        r1 = min(r0 + _ROW_BLOCK, n)
        rows = x[r0:r1]
        # running k smallest squared distances per query row
        best = np.full((r1 - r0, k), np.inf, dtype=np.float64)
        for c0 in range(0, n, _ROW_BLOCK):
            c1 = min(c0 + _ROW_BLOCK, n)
            sq = _block_sq_dists(rows, x[c0:c1])
            lo = max(r0, c0)
            hi = min(r1, c1)
            if lo < hi:  # mask out self distances on the diagonal
                diag = np.arange(lo, hi)
                sq[diag - r0, diag - c0] = np.inf
            merged = np.concatenate([best, sq], axis=1)
            best = np.partition(merged, k - 1, axis=1)[:, :k]
        radii[r0:r1] = np.sqrt(best.max(axis=1))
    return radii


def build_manifold(embeddings, k: int = DEFAULT_K) -> ManifoldModel:
    embeddings = _as_set(embeddings)
    return ManifoldModel(support=embeddings, radii=knn_radii(embeddings, k), k=k)


def compute_prdc(real, generated, k: int = DEFAULT_K) -> PrdcResult:
    """Precision, recall, density, coverage with inclusive ball membership.

    With r = knn_radii(real, k) and g = knn_radii(generated, k):
      precision = fraction of generated points inside some real ball
      recall    = fraction of real points inside some generated ball
      density   = mean over generated points of (#covering real balls) / k
      coverage  = fraction of real balls containing a generated point
    """
    real = _as_set(real)
    generated = _as_set(generated)
    if real.d != generated.d:
        raise ShapeError(f"feature dimension mismatch: real d={real.d}, generated d={generated.d}")
    r = knn_radii(real, k)
    g = knn_radii(generated, k)
    xr = real.data
    xg = generated.data
    n, m = real.n, generated.n

    gen_in_real = np.zeros(m, dtype=bool)  # precision
    covering_balls = np.zeros(m, dtype=np.int64)  # density
    real_covered = np.zeros(n, dtype=bool)  # coverage
    real_in_gen = np.zeros(n, dtype=bool)  # recall

    for j0 in range(0, m, _ROW_BLOCK):
        j1 = min(j0 + _ROW_BLOCK, m)
        gen_rows = xg[j0:j1]
        g_block = g[j0:j1]
        for i0 in range(0, n, _ROW_BLOCK):
            i1 = min(i0 + _ROW_BLOCK, n)
            dist = np.sqrt(_block_sq_dists(gen_rows, xr[i0:i1]))  # (gen, real)
            in_real_ball = dist <= r[i0:i1][None, :]
            gen_in_real[j0:j1] |= in_real_ball.any(axis=1)
            covering_balls[j0:j1] += in_real_ball.sum(axis=1)
            real_covered[i0:i1] |= in_real_ball.any(axis=0)
            real_in_gen[i0:i1] |= (dist <= g_block[:, None]).any(axis=0)

    return PrdcResult(
        precision=float(gen_in_real.sum()) / m,
        recall=float(real_in_gen.sum()) / n,
        density=float(covering_balls.sum()) / (k * m),
        coverage=float(real_covered.sum()) / n,
    )
