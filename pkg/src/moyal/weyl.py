"""Weyl correspondence: quantizer/dequantizer pair, symbol maps, Wigner functions.

The quantizer is the displaced parity 2 T(2 alpha) exp(i pi a^dag a) with
alpha = (q + ip)/sqrt(2); the dequantizer is the same operator divided by
2 pi.  Symbols are Abel-damped traces against the quantizer, evaluated on
uniform rectangular grids; the inverse map is plain trapezoid quadrature of
f(q, p) times the dequantizer.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import _backend
from .errors import (
    AliasingWarning,
    BoundaryDecayWarning,
    ShapeError,
    TruncationWarning,
    ValidationError,
)
from .fock import (
    DampingSchedule,
    FockOperator,
    damped_trace,
    neville_stages,
    parity_signs,
)

SQRT2 = math.sqrt(2.0)

# Warn when the squared coherent amplitude at the grid edge exceeds this
# fraction of the truncation dimension.
EXTENT_FRACTION = 0.6

# Boundary samples larger than this fraction of the interior maximum mean the
# field does not decay on the grid.
DECAY_RATIO = 1e-4

HERMITIAN_TOL = 1e-10
REAL_TOL = 1e-6
TRACE_TOL = 1e-6


@dataclass(frozen=True)
class PhasePoint:
    """Point (q, p) of the dimensionless phase plane."""

    q: float
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.p)):
            raise ValidationError(f"phase-space coordinates must be finite, got ({self.q}, {self.p})")
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "p", float(self.p))

    @property
    def alpha(self) -> complex:
        """Complex amplitude (q + ip)/sqrt(2)."""
        return complex(self.q, self.p) / SQRT2

    def as_tuple(self) -> tuple:
        return (self.q, self.p)


def _point(x) -> PhasePoint:
    if isinstance(x, PhasePoint):
        return x
    q, p = x
    return PhasePoint(float(q), float(p))


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform rectangular sampling of the phase plane, q along rows."""

    q_min: float
    q_max: float
    p_min: float
    p_max: float
    nq: int
    np: int

    def __post_init__(self):
        if not (self.q_min < self.q_max and self.p_min < self.p_max):
            raise ValidationError("grid bounds must satisfy q_min < q_max and p_min < p_max")
        if self.nq < 2 or self.np < 2:
            raise ValidationError("grids need at least two samples per axis")

    @classmethod
    def square(cls, extent: float, points: int) -> "PhaseGrid":
        return cls(-extent, extent, -extent, extent, points, points)

    @property
    def dq(self) -> float:
        return (self.q_max - self.q_min) / (self.nq - 1)

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / (self.np - 1)

    def q_values(self) -> np.ndarray:
        return np.linspace(self.q_min, self.q_max, self.nq)

    def p_values(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.np)

    def meshgrid(self) -> tuple:
        return np.meshgrid(self.q_values(), self.p_values(), indexing="ij")

    def trapezoid_weights(self) -> np.ndarray:
        wq = np.full(self.nq, self.dq)
        wq[0] *= 0.5
        wq[-1] *= 0.5
        wp = np.full(self.np, self.dp)
        wp[0] *= 0.5
        wp[-1] *= 0.5
        return np.outer(wq, wp)

    def to_dict(self) -> dict:
        return {
            "q_min": self.q_min, "q_max": self.q_max,
            "p_min": self.p_min, "p_max": self.p_max,
            "nq": self.nq, "np": self.np,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PhaseGrid":
        return cls(d["q_min"], d["q_max"], d["p_min"], d["p_max"], int(d["nq"]), int(d["np"]))


@dataclass(frozen=True)
class SymbolField:
    """Complex samples of a phase-space function on a PhaseGrid."""

    grid: PhaseGrid
    values: np.ndarray
    real_valued: bool = False
    real_tolerance: float = 0.0
    max_imag: float = 0.0
    imaginary_valued: bool = False
    max_real: float = 0.0
    normalization: float | None = None
    error_estimate: float = 0.0
    mask: np.ndarray | None = None
    notes: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != (self.grid.nq, self.grid.np):
            raise ShapeError(
                f"field shape {v.shape} does not match grid ({self.grid.nq}, {self.grid.np})"
            )
        object.__setattr__(self, "values", v)

    def integral(self) -> complex:
        """Trapezoid integral over the grid with measure dq dp."""
        return complex(np.sum(self.grid.trapezoid_weights() * self.values))

    def boundary_decay_ok(self, ratio: float = DECAY_RATIO) -> bool:
        v = np.abs(self.values)
        boundary = max(v[0, :].max(), v[-1, :].max(), v[:, 0].max(), v[:, -1].max())
        interior = v[1:-1, 1:-1].max() if min(v.shape) > 2 else v.max()
        if interior == 0.0:
            return True
        return boundary < ratio * interior

    def with_values(self, values: np.ndarray, **changes) -> "SymbolField":
        return replace(self, values=values, **changes)

    def to_csv(self, path) -> None:
        """CSV columns q,p,re,im (q-major rows) plus a JSON metadata sidecar."""
        path = str(path)
        qs = self.grid.q_values()
        ps = self.grid.p_values()
        with open(path, "w") as fh:
            fh.write("q,p,re,im\n")
            for i in range(self.grid.nq):
                for j in range(self.grid.np):
                    v = self.values[i, j]
                    fh.write(
                        f"{float(qs[i])!r},{float(ps[j])!r},"
                        f"{float(v.real)!r},{float(v.imag)!r}\n"
                    )
        with open(sidecar_path(path), "w") as fh:
            json.dump(self.metadata(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def metadata(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "flags": {
                "real_valued": self.real_valued,
                "real_tolerance": self.real_tolerance,
                "max_imag": self.max_imag,
                "imaginary_valued": self.imaginary_valued,
                "max_real": self.max_real,
            },
            "normalization": self.normalization,
            "error_estimate": self.error_estimate,
            "masked_points": int(self.mask.sum()) if self.mask is not None else 0,
            "notes": list(self.notes),
        }

    @classmethod
    def from_csv(cls, path) -> "SymbolField":
        path = str(path)
        with open(sidecar_path(path)) as fh:
            meta = json.load(fh)
        grid = PhaseGrid.from_dict(meta["grid"])
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        values = (data[:, 2] + 1j * data[:, 3]).reshape(grid.nq, grid.np)
        flags = meta.get("flags", {})
        return cls(
            grid=grid,
            values=values,
            real_valued=flags.get("real_valued", False),
            real_tolerance=flags.get("real_tolerance", 0.0),
            max_imag=flags.get("max_imag", 0.0),
            imaginary_valued=flags.get("imaginary_valued", False),
            max_real=flags.get("max_real", 0.0),
            normalization=meta.get("normalization"),
            error_estimate=meta.get("error_estimate", 0.0),
            notes=tuple(meta.get("notes", ())),
        )


def sidecar_path(csv_path: str) -> str:
    if csv_path.endswith(".csv"):
        return csv_path[:-4] + ".json"
    return csv_path + ".json"


def quantizer(x, dim: int) -> FockOperator:
    """Self-adjoint displaced parity 2 T(2 alpha) exp(i pi a^dag a)."""
    x = _point(x)
    t = _backend.displacement_matrix(2 * x.alpha, dim)
    return FockOperator(2.0 * t * parity_signs(dim)[None, :])


def dequantizer(x, dim: int) -> FockOperator:
    """Dual family: quantizer / (2 pi)."""
    return FockOperator(quantizer(x, dim).matrix / (2 * math.pi))


def _grid_gammas(grid: PhaseGrid) -> np.ndarray:
    qg, pg = grid.meshgrid()
    return (SQRT2 * (qg + 1j * pg)).ravel()


def _chunk_size(dim: int, budget_bytes: int = 128 * 2**20) -> int:
    return max(16, budget_bytes // (dim * dim * 16))


def _check_extent(grid: PhaseGrid, dim: int) -> list:
    corners = max(
        q * q + p * p
        for q in (grid.q_min, grid.q_max)
        for p in (grid.p_min, grid.p_max)
    )
    alpha_sq = corners / 2.0
    notes = []
    if alpha_sq > EXTENT_FRACTION * dim:
        msg = (
            f"grid corner |alpha|^2 = {alpha_sq:.1f} is not well inside the "
            f"truncation dimension {dim}"
        )
        warnings.warn(msg, TruncationWarning)
        notes.append(msg)
    return notes


def _damped_field(diag_samples: np.ndarray, dim: int, schedule: DampingSchedule):
    """Extrapolate per-point damped sums; diag_samples has shape (pts, dim)."""
    eps = np.array(schedule.epsilons)
    damp = np.exp(-eps[:, None] * np.arange(dim)[None, :])
    t = diag_samples @ damp.T  # (pts, n_eps)
    stages = neville_stages(schedule.epsilons, t.T)
    k = min(schedule.extrapolation_order, stages.shape[0] - 1)
    values = stages[k]
    err = np.abs(stages[k] - stages[k - 1]) if k >= 1 else np.zeros_like(values, dtype=float)
    return values, err


def symbol_of(
    a: FockOperator,
    grid: PhaseGrid,
    schedule: DampingSchedule | None = None,
    *,
    hermitian_tol: float = HERMITIAN_TOL,
    real_tol: float = REAL_TOL,
) -> SymbolField:
    """Weyl symbol: damped_trace(quantizer(x) . a) at every grid point.

    Non-finite traces are masked per point instead of failing the whole grid.
    Hermitian input flags the field real_valued and records max |Im|.
    """
    if schedule is None:
        schedule = DampingSchedule.default()
    dim = a.dim
    notes = _check_extent(grid, dim)
    signs = parity_signs(dim)
    c = signs[:, None] * a.matrix  # parity . a acts on rows
    gammas = _grid_gammas(grid)
    npts = gammas.shape[0]
    diag = np.empty((npts, dim), dtype=np.complex128)
    chunk = _chunk_size(dim)
    for lo in range(0, npts, chunk):
        hi = min(lo + chunk, npts)
        tb = _backend.displacement_batch(gammas[lo:hi], dim)
        diag[lo:hi] = 2.0 * np.einsum("pnm,mn->pn", tb, c)
    values, err = _damped_field(diag, dim, schedule)
    mask = ~np.isfinite(values)
    finite_err = err[~mask.ravel()] if mask.any() else err
    field_kwargs = {}
    herm = np.abs(a.matrix - a.matrix.conj().T).max() <= hermitian_tol
    if herm:
        vals = values[~mask] if mask.any() else values
        max_imag = float(np.abs(vals.imag).max()) if vals.size else 0.0
        field_kwargs = {
            "real_valued": max_imag <= real_tol,
            "real_tolerance": real_tol,
            "max_imag": max_imag,
        }
    return SymbolField(
        grid=grid,
        values=values.reshape(grid.nq, grid.np),
        error_estimate=float(finite_err.max()) if finite_err.size else 0.0,
        mask=mask.reshape(grid.nq, grid.np) if mask.any() else None,
        notes=tuple(notes),
        **field_kwargs,
    )


def operator_of(f: SymbolField, dim: int) -> FockOperator:
    """Trapezoid quadrature of f(q, p) dequantizer(q, p) dq dp.

    Warns when the field does not decay at the boundary or when the grid is
    too coarse to resolve level `dim` oscillations (spacing > pi/sqrt(2 dim)).
    """
    grid = f.grid
    if not f.boundary_decay_ok():
        warnings.warn(
            "symbol field does not decay at the grid boundary; the quadrature "
            "approximates the operator only in smeared tests",
            BoundaryDecayWarning,
        )
    nyquist = math.pi / math.sqrt(2.0 * dim)
    if max(grid.dq, grid.dp) > nyquist:
        warnings.warn(
            f"grid spacing {max(grid.dq, grid.dp):.4f} exceeds pi/sqrt(2 dim) = "
            f"{nyquist:.4f}; high levels will alias",
            AliasingWarning,
        )
    weighted = (f.values * grid.trapezoid_weights()).ravel()
    gammas = _grid_gammas(grid)
    acc = np.zeros((dim, dim), dtype=np.complex128)
    chunk = _chunk_size(dim)
    for lo in range(0, gammas.shape[0], chunk):
        hi = min(lo + chunk, gammas.shape[0])
        tb = _backend.displacement_batch(gammas[lo:hi], dim)
        acc += np.einsum("p,pnm->nm", weighted[lo:hi], tb)
    acc = (acc * parity_signs(dim)[None, :]) / math.pi
    return FockOperator(acc)


def wigner(
    rho: FockOperator,
    grid: PhaseGrid,
    schedule: DampingSchedule | None = None,
    *,
    hermitian_tol: float = HERMITIAN_TOL,
    trace_tol: float = TRACE_TOL,
    real_tol: float = REAL_TOL,
) -> SymbolField:
    """Wigner function 2 damped_trace(rho T(2 alpha) parity) of a density operator.

    Validates hermiticity and unit trace, flags the result real_valued, and
    attaches the normalization report (1/2 pi) integral W dq dp.
    """
    if schedule is None:
        schedule = DampingSchedule.default()
    violations = []
    herm_defect = float(np.abs(rho.matrix - rho.matrix.conj().T).max())
    if herm_defect > hermitian_tol:
        violations.append(f"hermiticity defect {herm_defect:.2e} > {hermitian_tol:.0e}")
    tr = damped_trace(rho, schedule).value
    if abs(tr - 1.0) > trace_tol:
        violations.append(f"trace {tr:.8f} differs from 1 by more than {trace_tol:.0e}")
    if violations:
        raise ValidationError("; ".join(violations))
    dim = rho.dim
    notes = _check_extent(grid, dim)
    signs = parity_signs(dim)
    gammas = _grid_gammas(grid)
    npts = gammas.shape[0]
    diag = np.empty((npts, dim), dtype=np.complex128)
    chunk = _chunk_size(dim)
    for lo in range(0, npts, chunk):
        hi = min(lo + chunk, npts)
        tb = _backend.displacement_batch(gammas[lo:hi], dim)
        # [rho T(2a) P]_nn = sum_m rho[n, m] T[m, n] (-1)^n
        diag[lo:hi] = 2.0 * np.einsum("nm,pmn->pn", rho.matrix, tb) * signs[None, :]
    values, err = _damped_field(diag, dim, schedule)
    max_imag = float(np.abs(values.imag).max())
    field = SymbolField(
        grid=grid,
        values=values.reshape(grid.nq, grid.np),
        real_valued=max_imag <= real_tol,
        real_tolerance=real_tol,
        max_imag=max_imag,
        error_estimate=float(err.max()),
        notes=tuple(notes),
    )
    norm = float(np.real(field.integral()) / (2 * math.pi))
    return replace(field, normalization=norm)
