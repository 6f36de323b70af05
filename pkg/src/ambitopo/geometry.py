"""Dense vector primitives.

Normalization, exact pairwise distance matrices, orthonormal bases via
Householder QR, and Johnson-Lindenstrauss style Gaussian random projection.
All randomness flows from explicit seeds; nothing touches global RNG state.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateInputError, DimensionMismatchError


def as_points(points) -> np.ndarray:
    """Coerce a sequence of vectors (or an (n, d) array) to a float64 matrix."""
    try:
        pts = np.asarray(points, dtype=np.float64)
    except ValueError as exc:
        raise DimensionMismatchError(f"points have inconsistent dimensions: {exc}") from exc
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.ndim != 2:
        raise ValueError(f"expected a 2-D point array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points contain non-finite entries")
    return pts


def normalize(v) -> np.ndarray:
    """Return v / ||v||_2. Direction is preserved exactly.

    Raises DegenerateInputError for a zero vector.
    """
    vec = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(vec)):
        raise ValueError("vector contains non-finite entries")
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise DegenerateInputError("cannot normalize a zero vector")
    return vec / norm


def pairwise_distances(points) -> np.ndarray:
    """Exact Euclidean distance matrix of a point cloud.

    Symmetric with a zero diagonal by construction; entry (i, j) is computed
    from the coordinate-wise difference, never from dot-product shortcuts, so
    no negative round-off can appear under the square root.
    """
    pts = as_points(points)
    diffs = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diffs, diffs))
    np.fill_diagonal(dist, 0.0)
    return dist


def validate_distance_matrix(d, *, sym_tol: float = 1e-12) -> np.ndarray:
    """Check symmetry, non-negativity and zero diagonal; return float64 copy."""
    mat = np.asarray(d, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {mat.shape}")
    if mat.shape[0] < 1:
        raise ValueError("distance matrix must contain at least one point")
    if not np.all(np.isfinite(mat)):
        raise ValueError("distance matrix contains non-finite entries")
    if np.max(np.abs(mat - mat.T), initial=0.0) > sym_tol:
        raise ValueError("distance matrix is not symmetric")
    if np.any(mat < 0.0):
        raise ValueError("distance matrix has negative entries")
    if np.any(np.diag(mat) != 0.0):
        raise ValueError("distance matrix diagonal is not zero")
    # Exact symmetry simplifies downstream filtration construction.
    return (mat + mat.T) / 2.0


def orthonormal_columns(dim: int, count: int, seed) -> np.ndarray:
    """(dim, count) matrix with orthonormal columns, deterministic per seed.

    Reduced QR (LAPACK Householder reflections) of a Gaussian matrix; column
    signs are fixed so the R diagonal is positive, removing the sign
    ambiguity of the factorization.
    """
    if count > dim:
        raise ValueError(f"cannot fit {count} orthonormal columns in dimension {dim}")
    if count < 1 or dim < 2:
        raise ValueError("need dim >= 2 and count >= 1")
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((dim, count))
    q, r = np.linalg.qr(m, mode="reduced")
    signs = np.where(np.diag(r) >= 0.0, 1.0, -1.0)
    return q * signs


def random_projection(points, target_dim: int, seed) -> np.ndarray:
    """Project an (n, d) cloud to target_dim with one shared Gaussian matrix.

    Entries are i.i.d. N(0, 1) scaled by 1/sqrt(target_dim), the standard
    Johnson-Lindenstrauss construction: pairwise distances are preserved up
    to the JL distortion with high probability.
    """
    pts = as_points(points)
    dim = pts.shape[1]
    if target_dim >= dim:
        raise ValueError(f"target_dim {target_dim} must be below the input dimension {dim}")
    if target_dim < 2:
        raise ValueError("target_dim must be at least 2")
    rng = np.random.default_rng(seed)
    proj = rng.standard_normal((dim, target_dim)) / np.sqrt(target_dim)
    return pts @ proj
