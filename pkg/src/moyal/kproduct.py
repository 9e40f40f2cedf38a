"""K-deformed associative product a .K b = a K b on finite matrices.

The product stays associative for any K; a unit (K^-1) exists only for
invertible K, and the square-root transport A -> sqrt(K) A sqrt(K) is a
homomorphism onto the ordinary product whenever K is positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PositivityError, ShapeError
from .fock import FockOperator

INVERTIBLE_RTOL = 1e-12
POSITIVE_MIN_EIG = 1e-12
HERMITIAN_TOL = 1e-10


def _mat(a) -> np.ndarray:
    if isinstance(a, FockOperator):
        return a.matrix
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class KContext:
    """Deformation matrix plus computed invertibility / positivity flags."""

    k: np.ndarray
    invertible: bool
    positive: bool
    min_eigenvalue: float

    @classmethod
    def from_matrix(cls, k) -> "KContext":
        km = _mat(k).copy()
        km.flags.writeable = False
        sv = np.linalg.svd(km, compute_uv=False)
        invertible = bool(sv[-1] > INVERTIBLE_RTOL * sv[0])
        hermitian = np.abs(km - km.conj().T).max() <= HERMITIAN_TOL
        if hermitian:
            min_eig = float(np.linalg.eigvalsh(km)[0])
            positive = min_eig > POSITIVE_MIN_EIG
        else:
            min_eig = float("nan")
            positive = False
        return cls(k=km, invertible=invertible, positive=positive, min_eigenvalue=min_eig)

    @property
    def dim(self) -> int:
        return self.k.shape[0]


def k_multiply(a, b, ctx: KContext) -> np.ndarray:
    """a .K b = a K b."""
    am, bm = _mat(a), _mat(b)
    if am.shape != (ctx.dim, ctx.dim) or bm.shape != (ctx.dim, ctx.dim):
        raise ShapeError(
            f"operand shapes {am.shape}, {bm.shape} do not match K dimension {ctx.dim}"
        )
    return am @ ctx.k @ bm


def k_unit(ctx: KContext) -> np.ndarray:
    """Unit of the K-product, K^-1 (exists only for invertible K)."""
    if not ctx.invertible:
        raise PositivityError("K is numerically singular; the K-product has no unit")
    return np.linalg.inv(ctx.k)


def k_associativity_defect(a, b, c, ctx: KContext) -> float:
    """Max-entry magnitude of (a .K b) .K c - a .K (b .K c)."""
    left = k_multiply(k_multiply(a, b, ctx), c, ctx)
    right = k_multiply(a, k_multiply(b, c, ctx), ctx)
    return float(np.abs(left - right).max())


def sqrt_k_transport(a, ctx: KContext) -> np.ndarray:
    """A -> sqrt(K) A sqrt(K) with the principal Hermitian square root.

    Homomorphism onto the ordinary product:
    transport(a) transport(b) == transport(a .K b).
    """
    if not ctx.positive:
        raise PositivityError(
            f"square-root transport needs positive K; smallest eigenvalue is "
            f"{ctx.min_eigenvalue}"
        )
    eigvals, eigvecs = np.linalg.eigh(ctx.k)
    root = (eigvecs * np.sqrt(eigvals)[None, :]) @ eigvecs.conj().T
    return root @ _mat(a) @ root


def k_integral_product(a_kernel, k_kernel, b_kernel, x: np.ndarray) -> np.ndarray:
    """Quadrature form: (a .K b)(x, x') = integral a(x,y) K(y,z) b(z,x') dy dz.

    All three two-point kernels are sampled on the shared 1-D grid `x`;
    trapezoid weights are absorbed into K, which reduces the integral to a
    weighted matrix product.
    """
    am, km, bm = _mat(a_kernel), _mat(k_kernel), _mat(b_kernel)
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if not (am.shape == km.shape == bm.shape == (n, n)):
        raise ShapeError(
            f"kernels {am.shape}, {km.shape}, {bm.shape} do not share the grid length {n}"
        )
    if n >= 2:
        h = np.diff(x)
        w = np.zeros(n)
        w[:-1] += h / 2
        w[1:] += h / 2
    else:
        w = np.ones(1)
    return am @ (w[:, None] * km * w[None, :]) @ bm
