"""Star products of phase-space symbols: kernel-quadrature and operator routes.

The kernel route evaluates the double trapezoid sum of
fa(x1) fb(x2) K(x1, x2; x) with the analytic kernel (pure Groenewold phase,
or the deformed variant for quadratic-in-lambda nonlinearities).  The
operator route maps the symbols back to truncated operators, multiplies with
the diagonal insertion, and takes the symbol of the product.  Both routes
agree within quadrature tolerance on decaying inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _backend
from .errors import ContractViolationError, ShapeError
from .fock import DampingSchedule, FockOperator
from .foscillator import NonlinearityFunction
from .weyl import DECAY_RATIO, PhaseGrid, SymbolField, operator_of, symbol_of

ROUTES = ("operator", "kernel_quadrature")

# Direct deformed-kernel quadrature is quadratic in the grid size with no
# factorizable structure; refuse grids whose pair count would be excessive.
MAX_DEFORMED_PAIRS = 5e7


@dataclass(frozen=True)
class StarConfig:
    """Route, kernel kind (through `f`), grid and trace regularization."""

    route: str
    grid: PhaseGrid
    dim: int
    schedule: DampingSchedule
    f: NonlinearityFunction = NonlinearityFunction.identity()
    out_bound: float | None = None  # kernel route: only |q|,|p| <= bound outputs
    block: int = 512

    def __post_init__(self):
        if self.route not in ROUTES:
            raise ContractViolationError(f"route must be one of {ROUTES}, got {self.route!r}")

    def kernel_lambda(self) -> float:
        """Deformation strength of the analytic kernel used by the kernel route."""
        if self.f.kind == "identity":
            return 0.0
        if self.f.kind in ("q_exact", "q_quadratic"):
            return self.f.lam
        raise ContractViolationError(
            "kernel-quadrature route supports identity or quadratic-lambda "
            f"nonlinearities, not kind {self.f.kind!r}"
        )


def _require_decaying(field: SymbolField, name: str) -> None:
    if not field.boundary_decay_ok(DECAY_RATIO):
        raise ContractViolationError(
            f"kernel-route input {name} does not decay at the grid boundary "
            f"(threshold {DECAY_RATIO:g} of the interior maximum)"
        )


def _check_same_grid(fa: SymbolField, fb: SymbolField, grid: PhaseGrid) -> None:
    if fa.grid != grid or fb.grid != grid:
        raise ShapeError("star inputs must share the configured grid")


def _output_mask(grid: PhaseGrid, bound: float | None) -> np.ndarray:
    qg, pg = grid.meshgrid()
    if bound is None:
        return np.ones_like(qg, dtype=bool)
    return (np.abs(qg) <= bound) & (np.abs(pg) <= bound)


def _star_kernel(fa: SymbolField, fb: SymbolField, cfg: StarConfig) -> SymbolField:
    _require_decaying(fa, "fa")
    _require_decaying(fb, "fb")
    grid = cfg.grid
    lam = cfg.kernel_lambda()
    qg, pg = grid.meshgrid()
    w = grid.trapezoid_weights().ravel()
    q = qg.ravel()
    p = pg.ravel()
    faw = fa.values.ravel() * w
    fbw = fb.values.ravel() * w
    mask = _output_mask(grid, cfg.out_bound)
    oq = qg[mask].ravel()
    op = pg[mask].ravel()
    if lam == 0.0:
        s = _backend.star_phase_quadrature(faw, q, p, fbw, q, p, oq, op, cfg.block)
    else:
        s = _deformed_quadrature(faw, q, p, fbw, q, p, oq, op, lam)
    values = np.zeros(grid.nq * grid.np, dtype=np.complex128)
    values[mask.ravel()] = s
    notes = () if cfg.out_bound is None else (f"kernel route evaluated on |q|,|p| <= {cfg.out_bound}",)
    return SymbolField(grid=grid, values=values.reshape(grid.nq, grid.np), notes=notes)


def _deformed_quadrature(faw, q1, p1, fbw, q2, p2, oq, op, lam) -> np.ndarray:
    """Direct sum with the deformed kernel; only viable on small grids."""
    n1 = q1.shape[0]
    if n1 * q2.shape[0] > MAX_DEFORMED_PAIRS:
        raise ContractViolationError(
            f"deformed kernel route needs {n1 * q2.shape[0]:.1e} pair evaluations "
            "per output point; use a smaller grid"
        )
    coeff = lam * lam / 192.0
    mid = np.exp(2j * (q1[:, None] * p2[None, :] - q2[None, :] * p1[:, None]))
    sum_q = q1[:, None] + q2[None, :]
    sum_p = p1[:, None] + p2[None, :]
    out = np.empty(oq.shape[0], dtype=np.complex128)
    for j in range(oq.shape[0]):
        u = faw * np.exp(2j * (oq[j] * p1 - q1 * op[j]))
        v = fbw * np.exp(2j * (q2 * op[j] - oq[j] * p2))
        mu = (oq[j] - sum_q) ** 2 + (op[j] - sum_p) ** 2
        factor = 1.0 + coeff * (mu - 1.0) ** 2
        out[j] = np.sum((u[:, None] * v[None, :]) * mid * factor)
    return out / math.pi**2


def _operators_of(fields, cfg: StarConfig) -> list:
    return [operator_of(f, cfg.dim) for f in fields]


def _insert(f: NonlinearityFunction, dim: int, b: np.ndarray) -> np.ndarray:
    return f.values(dim)[:, None] * b


def _star_operator(fa: SymbolField, fb: SymbolField, cfg: StarConfig) -> SymbolField:
    a, b = _operators_of((fa, fb), cfg)
    product = FockOperator(a.matrix @ _insert(cfg.f, cfg.dim, b.matrix))
    return symbol_of(product, cfg.grid, cfg.schedule)


def star(fa: SymbolField, fb: SymbolField, cfg: StarConfig) -> SymbolField:
    """(fa * fb)(x) by the configured route."""
    _check_same_grid(fa, fb, cfg.grid)
    if cfg.route == "kernel_quadrature":
        return _star_kernel(fa, fb, cfg)
    return _star_operator(fa, fb, cfg)


def moyal_bracket(fa: SymbolField, fb: SymbolField, cfg: StarConfig) -> SymbolField:
    """star(fa, fb) - star(fb, fa); imaginary-flagged for real-valued inputs."""
    s_ab = star(fa, fb, cfg)
    s_ba = star(fb, fa, cfg)
    values = s_ab.values - s_ba.values
    flags = {}
    if fa.real_valued and fb.real_valued:
        flags = {
            "imaginary_valued": True,
            "max_real": float(np.abs(values.real).max()),
        }
    return SymbolField(
        grid=cfg.grid,
        values=values,
        error_estimate=s_ab.error_estimate + s_ba.error_estimate,
        notes=s_ab.notes,
        **flags,
    )


def jacobi_defect(fa: SymbolField, fb: SymbolField, fc: SymbolField, cfg: StarConfig) -> float:
    """Max magnitude of [[fa,fb],fc] + [[fb,fc],fa] + [[fc,fa],fb].

    On the operator route the nesting is carried out on the truncated
    operators (one final symbol evaluation), which reduces the defect to
    floating-point commutator noise.  On the kernel route the inner brackets
    are evaluated on the full grid and the outer ones on the configured
    output window.
    """
    _check_same_grid(fa, fb, cfg.grid)
    if fc.grid != cfg.grid:
        raise ShapeError("star inputs must share the configured grid")
    if cfg.route == "operator":
        a, b, c = (m.matrix for m in _operators_of((fa, fb, fc), cfg))
        fv = cfg.f.values(cfg.dim)[:, None]

        def kbracket(x, y):
            return x @ (fv * y) - y @ (fv * x)

        total = kbracket(kbracket(a, b), c) + kbracket(kbracket(b, c), a) + kbracket(kbracket(c, a), b)
        field = symbol_of(FockOperator(total), cfg.grid, cfg.schedule)
        mask = _output_mask(cfg.grid, cfg.out_bound)
        return float(np.abs(field.values[mask]).max())
    inner_cfg = replace(cfg, out_bound=None)
    b_ab = moyal_bracket(fa, fb, inner_cfg)
    b_bc = moyal_bracket(fb, fc, inner_cfg)
    b_ca = moyal_bracket(fc, fa, inner_cfg)
    total = (
        moyal_bracket(b_ab, fc, cfg).values
        + moyal_bracket(b_bc, fa, cfg).values
        + moyal_bracket(b_ca, fb, cfg).values
    )
    mask = _output_mask(cfg.grid, cfg.out_bound)
    return float(np.abs(total[mask]).max())
