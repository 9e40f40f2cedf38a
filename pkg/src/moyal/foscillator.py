"""Nonlinearity functions, deformed ladder operators, nonlinear amplitude evolution.

A nonlinearity f turns the lowering operator a into A = a f(a^dag a); the
q-oscillator corresponds to f(n) = sqrt(sinh(lambda n)/(lambda n)) with
q = e^lambda, whose weak-nonlinearity expansion is 1 + (lambda^2/12) n^2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import PrecisionError, ShapeError, ValidationError
from .fock import FockOperator, annihilator
from .kproduct import KContext

KINDS = ("identity", "q_exact", "q_quadratic", "table")


@dataclass(frozen=True)
class NonlinearityFunction:
    """Level-diagonal deformation profile n -> f(n), n = 0, 1, 2, ..."""

    kind: str
    lam: float = 0.0
    table: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown nonlinearity kind {self.kind!r}")
        if self.kind == "table" and len(self.table) == 0:
            raise ValidationError("table nonlinearity needs at least one value")
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "table", tuple(float(v) for v in self.table))

    @classmethod
    def identity(cls) -> "NonlinearityFunction":
        return cls("identity")

    @classmethod
    def q_exact(cls, lam: float) -> "NonlinearityFunction":
        return cls("q_exact", lam=lam)

    @classmethod
    def q_quadratic(cls, lam: float) -> "NonlinearityFunction":
        return cls("q_quadratic", lam=lam)

    @classmethod
    def from_table(cls, values) -> "NonlinearityFunction":
        return cls("table", table=tuple(values))

    def __call__(self, n):
        n_arr = np.asarray(n, dtype=np.float64)
        if self.kind == "identity":
            out = np.ones_like(n_arr)
        elif self.kind == "q_quadratic":
            out = 1.0 + (self.lam**2 / 12.0) * n_arr**2
        elif self.kind == "q_exact":
            y = self.lam * n_arr
            with np.errstate(over="raise", invalid="ignore"):
                try:
                    ratio = np.where(y == 0.0, 1.0, np.sinh(y) / np.where(y == 0.0, 1.0, y))
                except FloatingPointError as exc:
                    raise PrecisionError(
                        f"sinh overflow in q_exact at lambda*n = {np.max(np.abs(y)):g}"
                    ) from exc
            out = np.sqrt(ratio)
        else:
            tab = np.asarray(self.table)
            idx = n_arr.astype(int)
            if np.any(idx >= len(tab)) or np.any(idx < 0):
                raise ShapeError(
                    f"table of length {len(tab)} too short for level {int(n_arr.max())}"
                )
            out = tab[idx]
        return float(out) if np.isscalar(n) else out

    def values(self, dim: int) -> np.ndarray:
        """f(0), ..., f(dim-1)."""
        if self.kind == "table" and len(self.table) < dim:
            raise ShapeError(f"table of length {len(self.table)} too short for dim {dim}")
        return np.asarray(self(np.arange(dim)), dtype=np.float64)

    def to_json(self) -> str:
        if self.kind == "table":
            payload = {"kind": "table", "values": list(self.table)}
        elif self.kind == "identity":
            payload = {"kind": "identity"}
        else:
            payload = {"kind": self.kind, "lambda": self.lam}
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "NonlinearityFunction":
        payload = json.loads(text)
        if not isinstance(payload, dict) or "kind" not in payload:
            raise ValidationError("nonlinearity JSON must be an object with a 'kind' field")
        kind = payload.pop("kind")
        if kind == "identity":
            extra = payload
        elif kind in ("q_exact", "q_quadratic"):
            lam = payload.pop("lambda", None)
            if lam is None:
                raise ValidationError(f"{kind} nonlinearity requires a 'lambda' field")
            extra = payload
            if not extra:
                return cls(kind, lam=float(lam))
        elif kind == "table":
            values = payload.pop("values", None)
            if values is None:
                raise ValidationError("table nonlinearity requires a 'values' field")
            extra = payload
            if not extra:
                return cls.from_table(values)
        else:
            raise ValidationError(f"unknown nonlinearity kind {kind!r}")
        if extra:
            raise ValidationError(f"unknown nonlinearity fields {sorted(extra)}")
        return cls.identity()


def deformed_annihilator(f: NonlinearityFunction, dim: int) -> FockOperator:
    """A = a . diag(f(0), ..., f(dim-1))."""
    a = annihilator(dim)
    return FockOperator(a.matrix * f.values(dim)[None, :])


def deformed_creator(f: NonlinearityFunction, dim: int) -> FockOperator:
    """A^dag = diag(f) . a^dag, exactly the adjoint of deformed_annihilator."""
    return deformed_annihilator(f, dim).adjoint()


def commutator_spectrum(f: NonlinearityFunction, dim: int) -> np.ndarray:
    """Diagonal of [A, A^dag] on interior levels n < dim - 2.

    The commutator is checked to be diagonal there (off-diagonal interior
    entries above 1e-12 mean the ladder construction is broken, not the
    caller's input).  Interior values equal (n+1) f(n+1)^2 - n f(n)^2.
    """
    if dim < 3:
        raise ValidationError("commutator spectrum needs dim >= 3")
    a = deformed_annihilator(f, dim)
    ad = a.adjoint()
    comm = a.matrix @ ad.matrix - ad.matrix @ a.matrix
    interior = comm[: dim - 2, : dim - 2]
    off = interior - np.diag(np.diag(interior))
    worst = np.abs(off).max()
    if worst > 1e-12:
        raise ValidationError(
            f"deformed commutator has interior off-diagonal entries up to {worst:.2e}"
        )
    return np.real(np.diag(comm)[: dim - 2]).copy()


@dataclass(frozen=True)
class AmplitudeState:
    """Classical oscillator amplitude plus its energy-dependent frequency."""

    a0: complex
    chi: Callable[[float], float]

    def __post_init__(self):
        a0 = complex(self.a0)
        if not (math.isfinite(a0.real) and math.isfinite(a0.imag)):
            raise ValidationError("initial amplitude must be finite")
        object.__setattr__(self, "a0", a0)


def evolve_amplitude(state: AmplitudeState, t: float) -> complex:
    """a(t) = a0 exp(-i chi(|a0|^2) t); the modulus is conserved.

    Built in polar form so the modulus survives to the last representable
    digit regardless of the accumulated phase.
    """
    if not math.isfinite(t):
        raise ValidationError("time must be finite")
    r = abs(state.a0)
    if r == 0.0:
        return 0j
    freq = float(state.chi(r * r))
    phase = math.atan2(state.a0.imag, state.a0.real) - freq * t
    return complex(r * math.cos(phase), r * math.sin(phase))


def k_context_from_f(f: NonlinearityFunction, dim: int) -> KContext:
    """Deformation matrix K = diag(f(n)); A .K B is then A f(a^dag a) B exactly.

    A nonpositive f only blocks the square-root transport; the context is
    still returned with positive=False.
    """
    return KContext.from_matrix(np.diag(f.values(dim)).astype(np.complex128))
