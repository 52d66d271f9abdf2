"""Vector math on embeddings: normalization and the three distances the losses use.

Every function accepts a single vector (shape ``(n,)``) or a stack of row
vectors (shape ``(..., n)``) and works along the last axis.
"""

import numpy as np

from .errors import DimensionMismatch, ZeroVector

#: Norms below this are treated as degenerate embeddings.
ZERO_NORM = 1e-12


def _as_float(v):
    return np.asarray(v, dtype=np.float64)


def l2_normalize(v):
    """Return ``v / ||v||`` row-wise; raise :class:`ZeroVector` on degenerate rows."""
    v = _as_float(v)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norm < ZERO_NORM):
        raise ZeroVector(f"cannot normalize a vector with norm < {ZERO_NORM:g}")
    return v / norm


def cosine_similarity(a, b):
    """Normalized dot product, clamped to [-1, 1]."""
    a = _as_float(a)
    b = _as_float(b)
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatch(f"dimensions differ: {a.shape[-1]} vs {b.shape[-1]}")
    dot = np.sum(l2_normalize(a) * l2_normalize(b), axis=-1)
    return np.clip(dot, -1.0, 1.0)


def cosine_distance(a, b):
    """``1 - cos(a, b)``, in [0, 2]."""
    return 1.0 - cosine_similarity(a, b)


def angular_distance(a, b):
    """Angle between ``a`` and ``b`` in radians, in [0, pi]. Never NaN."""
    return np.arccos(cosine_similarity(a, b))


def squared_euclidean_half(a, b):
    """``0.5 * ||a - b||^2``."""
    a = _as_float(a)
    b = _as_float(b)
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatch(f"dimensions differ: {a.shape[-1]} vs {b.shape[-1]}")
    diff = a - b
    return 0.5 * np.sum(diff * diff, axis=-1)


def normalization_vjp(f, grad_unit):
    """Pull a gradient w.r.t. ``f / ||f||`` back to ``f``.

    Applies the Jacobian ``(I - u u^T) / ||f||`` row-wise, where ``u`` is the
    normalized ``f``.
    """
    f = _as_float(f)
    norm = np.linalg.norm(f, axis=-1, keepdims=True)
    if np.any(norm < ZERO_NORM):
        raise ZeroVector(f"cannot normalize a vector with norm < {ZERO_NORM:g}")
    u = f / norm
    radial = np.sum(u * grad_unit, axis=-1, keepdims=True)
    return (grad_unit - radial * u) / norm
