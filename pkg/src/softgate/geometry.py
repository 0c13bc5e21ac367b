"""Simplex and hypersphere geometry.

Distances on the probability simplex, the sqrt(2) separation bound,
analytic n-ball and shell volumes, and the softmax / logit transforms.
All functions are pure and safe to call concurrently.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from softgate.errors import ValidationError

SQRT2 = math.sqrt(2.0)

#: Sum tolerance used when checking that a vector lies on the simplex.
SIMPLEX_TOL = 1e-9


def check_simplex(p, tol=SIMPLEX_TOL):
    """Validate that ``p`` is a probability vector; return it as float64.

    Raises ValidationError if any coordinate falls outside [0, 1] or the
    coordinates do not sum to 1 within ``tol``.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size < 2:
        raise ValidationError(f"expected a 1-d vector of length >= 2, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValidationError("simplex point has non-finite coordinates")
    if np.any(p < -tol) or np.any(p > 1.0 + tol):
        raise ValidationError("simplex coordinates must lie in [0, 1]")
    s = float(p.sum())
    if abs(s - 1.0) > tol:
        raise ValidationError(f"simplex coordinates sum to {s!r}, not 1")
    return p


@dataclass(frozen=True)
class ShellSpec:
    """A concentric shell: dimension and inner/outer radii."""

    dim: int
    r_inner: float
    r_outer: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError("shell dimension must be positive")
        if not (self.r_outer > self.r_inner >= 0.0):
            raise ValidationError(
                f"need r_outer > r_inner >= 0, got ({self.r_inner}, {self.r_outer})"
            )


def simplex_distance(p, q):
    """Euclidean distance between two points of equal dimension."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValidationError(f"dimension mismatch: {p.shape} vs {q.shape}")
    return float(np.linalg.norm(p - q))


def max_simplex_distance(dim):
    """Largest distance achievable between two points on the simplex.

    The bound is sqrt(2) for every dimension >= 2, attained by any pair
    of distinct one-hot vertices.
    """
    if dim < 2:
        raise ValidationError("need dim >= 2")
    return SQRT2


def hypersphere_volume(dim, r):
    """Volume of the n-ball: pi^(n/2) / Gamma(n/2 + 1) * r^n.

    Evaluated in log space so large dimensions neither overflow the
    gamma function nor underflow r^n prematurely.
    """
    if dim < 1:
        raise ValidationError("dimension must be positive")
    if r < 0:
        raise ValidationError("radius must be nonnegative")
    if r == 0.0:
        return 0.0
    log_v = 0.5 * dim * math.log(math.pi) - gammaln(dim / 2.0 + 1.0) + dim * math.log(r)
    return float(math.exp(log_v))


def shell_volume(spec):
    """Volume of the shell between spec.r_inner and spec.r_outer."""
    return hypersphere_volume(spec.dim, spec.r_outer) - hypersphere_volume(
        spec.dim, spec.r_inner
    )


def logit(p):
    """log(p / (1 - p)) for p strictly inside (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValidationError(f"logit requires 0 < p < 1, got {p}")
    return math.log(p / (1.0 - p))


def softmax(z):
    """Numerically stable softmax: exp(z_i) / sum_j exp(z_j).

    Shift-invariant; safe for components up to about +-1e3 thanks to
    max subtraction.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.size < 1:
        raise ValidationError(f"expected a 1-d vector, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValidationError("softmax input must be finite")
    shifted = z - z.max()
    e = np.exp(shifted)
    return e / e.sum()
