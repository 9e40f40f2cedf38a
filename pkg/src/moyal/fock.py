"""Truncated Fock-space operator algebra.

Dense complex matrices in the number basis, closed-form displacement
operators, and Abel-damped traces with polynomial extrapolation for the
conditionally convergent sums that displaced-parity products produce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import DimensionError, PrecisionError, ScheduleError, ShapeError

# Damping strengths used everywhere a caller does not supply a schedule.
DEFAULT_EPSILONS = (0.4, 0.2, 0.1, 0.05)
DEFAULT_ORDER = 2

# e^{-eps_min * dim} must fall below this for a non-decaying diagonal to be
# fully damped inside the truncation.
TAIL_THRESHOLD = 1e-6

# Extrapolation stages differing by more than this fraction of the value are
# flagged as non-convergent.
NONCONVERGENT_RATIO = 0.05


def _as_matrix(a) -> np.ndarray:
    if isinstance(a, FockOperator):
        return a.matrix
    return np.asarray(a, dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class FockOperator:
    """Operator on the first `dim` number states, entry (m, n) = <m|A|n>."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(np.asarray(self.matrix, dtype=np.complex128))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError(f"operator matrix must be square, got shape {m.shape}")
        if m.shape[0] < 2:
            raise DimensionError(f"truncation dimension must be >= 2, got {m.shape[0]}")
        if not np.all(np.isfinite(m.view(np.float64))):
            raise PrecisionError("operator entries must be finite")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def adjoint(self) -> "FockOperator":
        return FockOperator(self.matrix.conj().T)

    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.matrix)

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        return multiply(self, other)

    def __repr__(self) -> str:
        return f"FockOperator(dim={self.dim})"


def _check_dim(dim: int) -> int:
    if not isinstance(dim, (int, np.integer)) or dim < 2:
        raise DimensionError(f"truncation dimension must be an integer >= 2, got {dim!r}")
    return int(dim)


def identity(dim: int) -> FockOperator:
    return FockOperator(np.eye(_check_dim(dim), dtype=np.complex128))


def annihilator(dim: int) -> FockOperator:
    """Lowering operator a, entry (n-1, n) = sqrt(n)."""
    dim = _check_dim(dim)
    return FockOperator(np.diag(np.sqrt(np.arange(1, dim)), 1).astype(np.complex128))


def creator(dim: int) -> FockOperator:
    """Raising operator a^dag."""
    return annihilator(dim).adjoint()


def number_operator(dim: int) -> FockOperator:
    dim = _check_dim(dim)
    return FockOperator(np.diag(np.arange(dim)).astype(np.complex128))


def parity_operator(dim: int) -> FockOperator:
    """exp(i pi a^dag a): diagonal signs (-1)^n."""
    dim = _check_dim(dim)
    return FockOperator(np.diag((-1.0) ** np.arange(dim)).astype(np.complex128))


def parity_signs(dim: int) -> np.ndarray:
    return (-1.0) ** np.arange(_check_dim(dim))


def displacement(alpha: complex, dim: int) -> FockOperator:
    """T(alpha) = exp(alpha a^dag - alpha* a) from closed-form matrix elements.

    Exact per entry up to floating point; unitary up to truncation leakage
    confined to the highest levels.
    """
    dim = _check_dim(dim)
    alpha = complex(alpha)
    if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
        raise PrecisionError("displacement amplitude must be finite")
    m = _backend.displacement_matrix(alpha, dim)
    if not np.all(np.isfinite(m.view(np.float64))):
        raise PrecisionError(
            f"displacement matrix elements overflowed at |alpha|={abs(alpha):g}, dim={dim}"
        )
    return FockOperator(m)


def multiply(a: FockOperator, b: FockOperator) -> FockOperator:
    am, bm = _as_matrix(a), _as_matrix(b)
    if am.shape != bm.shape:
        raise ShapeError(f"dimension mismatch: {am.shape} vs {bm.shape}")
    return FockOperator(am @ bm)


def adjoint(a: FockOperator) -> FockOperator:
    return FockOperator(_as_matrix(a).conj().T)


def vacuum_projector(dim: int) -> FockOperator:
    return fock_projector(0, dim)


def fock_projector(level: int, dim: int) -> FockOperator:
    dim = _check_dim(dim)
    if not 0 <= level < dim:
        raise DimensionError(f"level {level} outside truncation 0..{dim - 1}")
    m = np.zeros((dim, dim), dtype=np.complex128)
    m[level, level] = 1.0
    return FockOperator(m)


def coherent_state(beta: complex, dim: int) -> np.ndarray:
    """Column vector of |beta> = T(beta)|0> in the number basis."""
    return displacement(beta, dim).matrix[:, 0].copy()


def coherent_projector(beta: complex, dim: int) -> FockOperator:
    v = coherent_state(beta, dim)
    return FockOperator(np.outer(v, v.conj()))


@dataclass(frozen=True)
class DampingSchedule:
    """Strictly decreasing damping strengths plus the extrapolation order."""

    epsilons: tuple = DEFAULT_EPSILONS
    extrapolation_order: int = DEFAULT_ORDER

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        if len(eps) == 0:
            raise ScheduleError("at least one damping strength is required")
        if any(not (0.0 < e <= 2.0) for e in eps):
            raise ScheduleError(f"damping strengths must lie in (0, 2], got {eps}")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ScheduleError(f"damping strengths must be strictly decreasing, got {eps}")
        order = self.extrapolation_order
        if not isinstance(order, (int, np.integer)) or order < 0:
            raise ScheduleError(f"extrapolation order must be a nonnegative integer, got {order!r}")
        if order >= 1 and len(eps) < 2:
            raise ScheduleError("extrapolation of order >= 1 needs at least two damping strengths")
        object.__setattr__(self, "epsilons", eps)
        object.__setattr__(self, "extrapolation_order", int(order))

    @classmethod
    def default(cls) -> "DampingSchedule":
        return cls(DEFAULT_EPSILONS, DEFAULT_ORDER)

    @property
    def min_epsilon(self) -> float:
        return self.epsilons[-1]


def neville_stages(epsilons, samples: np.ndarray) -> np.ndarray:
    """Neville extrapolation of samples(eps) to eps = 0.

    `samples` has shape (len(epsilons), ...).  Returns stages of shape
    (len(epsilons), ...): stage j is the degree-j polynomial through the j+1
    smallest damping strengths, evaluated at zero.
    """
    eps = np.asarray(epsilons, dtype=np.float64)
    cols = [np.asarray(samples)]
    m = len(eps)
    for j in range(1, m):
        prev = cols[-1]
        a = eps[: m - j]
        b = eps[j:]
        shape = (slice(None),) + (None,) * (prev.ndim - 1)
        col = (a[shape] * prev[1:] - b[shape] * prev[:-1]) / (a - b)[shape]
        cols.append(col)
    return np.stack([c[-1] for c in cols])


@dataclass(frozen=True)
class DampedTraceResult:
    """Extrapolated trace, its error estimate, and the raw damped sums."""

    value: complex
    error_estimate: float
    t_values: tuple
    stages: tuple
    converged: bool
    tail_ok: bool

    def __complex__(self) -> complex:
        return complex(self.value)


def damped_trace(a, schedule: DampingSchedule | None = None) -> DampedTraceResult:
    """Abel-regularized trace t(eps) = sum_n e^{-eps n} A_nn, extrapolated to eps=0.

    The error estimate is the difference between the last two extrapolation
    stages.  `tail_ok` records whether e^{-eps_min * dim} < 1e-6, i.e. whether
    the damping has fully decayed inside the truncation; `converged` records
    whether the extrapolation stages settled.  Divergent inputs (an undamped
    identity-like diagonal) are returned with converged=False rather than
    raised.
    """
    diag = _as_matrix(a).diagonal() if not isinstance(a, FockOperator) else a.diagonal()
    return damped_trace_from_diagonal(diag, schedule)


def damped_trace_from_diagonal(
    diag: np.ndarray, schedule: DampingSchedule | None = None
) -> DampedTraceResult:
    """damped_trace for callers that already hold the product diagonal."""
    if schedule is None:
        schedule = DampingSchedule.default()
    diag = np.asarray(diag, dtype=np.complex128)
    dim = diag.shape[0]
    n = np.arange(dim)
    eps = np.array(schedule.epsilons)
    t = np.exp(-eps[:, None] * n[None, :]) @ diag
    stages = neville_stages(schedule.epsilons, t)
    k = min(schedule.extrapolation_order, len(stages) - 1)
    value = complex(stages[k])
    error = float(abs(stages[k] - stages[k - 1])) if k >= 1 else 0.0
    tail_ok = math.exp(-schedule.min_epsilon * dim) < TAIL_THRESHOLD
    converged = bool(
        np.isfinite(value) and error <= NONCONVERGENT_RATIO * max(1.0, abs(value))
    )
    return DampedTraceResult(
        value=value,
        error_estimate=error,
        t_values=tuple(complex(v) for v in t),
        stages=tuple(complex(v) for v in stages[: k + 1]),
        converged=converged,
        tail_ok=tail_ok,
    )


def unitarity_buffer(alpha: complex, dim: int) -> int:
    """Top-level buffer inside which truncated T(alpha) is unitary to 1e-6.

    Displacement spreads a level n over ~|alpha| sqrt(n) neighbours, so the
    corrupted band scales with sqrt(dim), not with |alpha|^2 alone.
    """
    return 8 + math.ceil(2.0 * abs(alpha) * math.sqrt(dim))


def commutator_buffer(alpha: complex) -> int:
    """Default top-level exclusion for commutation-relation checks."""
    return 8 + 4 * math.ceil(abs(alpha) ** 2)
