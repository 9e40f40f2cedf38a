"""Star-product kernels.

The analytic Groenewold kernel is the pure phase

    K_G(x1, x2; x) = pi^-2 exp(2i(q p1 - q1 p + q1 p2 - q2 p1 + q2 p - q p2)),

the numeric kernel is the regularized trace of
dequantizer(x1) f(a^dag a) dequantizer(x2) quantizer(x), and the deformed
analytic kernel multiplies K_G by 1 + (lambda^2/192)(mu - 1)^2 with
mu = (q - q1 - q2)^2 + (p - p1 - p2)^2.  `deformation_check` compares the
deformed prediction against the trace route and, when the two disagree
stably, the measured ratio is reported as a fitted quadratic in mu rather
than silently patched into the analytic formula.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import IllConditionedError, TruncationWarning, ValidationError
from .fock import DampingSchedule, damped_trace_from_diagonal
from .foscillator import NonlinearityFunction
from .weyl import PhasePoint, _point, dequantizer, quantizer

PI_SQ_INV = math.pi**-2

# Default truncation for kernel work; diagonal insertions growing like n^2
# need the larger default for their damped tails to die inside the truncation.
DEFAULT_KERNEL_DIM = 128
DEFAULT_INSERTION_DIM = 448

DEFAULT_SEED = 20240101


@dataclass(frozen=True)
class KernelSample:
    """Kernel value at one point triple; error_estimate is 0 for analytic forms."""

    x1: PhasePoint
    x2: PhasePoint
    x_out: PhasePoint
    value: complex
    error_estimate: float = 0.0
    converged: bool = True


@dataclass(frozen=True)
class StructureSample:
    """Antisymmetrized kernel value (Lie structure constant) at one triple."""

    x1: PhasePoint
    x2: PhasePoint
    x_out: PhasePoint
    value: complex


def groenewold_phase(x1, x2, x_out) -> float:
    x1, x2, x = _point(x1), _point(x2), _point(x_out)
    return 2.0 * (
        x.q * x1.p - x1.q * x.p
        + x1.q * x2.p - x2.q * x1.p
        + x2.q * x.p - x.q * x2.p
    )


def groenewold_analytic(x1, x2, x_out) -> KernelSample:
    """Pure-phase kernel of modulus pi^-2."""
    value = PI_SQ_INV * np.exp(1j * groenewold_phase(x1, x2, x_out))
    return KernelSample(_point(x1), _point(x2), _point(x_out), complex(value))


def mu_invariant(x1, x2, x_out) -> float:
    """mu = (q - q2 - q1)^2 + (p - p2 - p1)^2, the deformed-kernel invariant."""
    x1, x2, x = _point(x1), _point(x2), _point(x_out)
    return (x.q - x2.q - x1.q) ** 2 + (x.p - x2.p - x1.p) ** 2


def lambda_kernel_analytic(lam: float, x1, x2, x_out) -> KernelSample:
    """Deformed kernel K_G (1 + (lambda^2/192)(mu - 1)^2), valid for |lambda| << 1."""
    base = groenewold_analytic(x1, x2, x_out)
    mu = mu_invariant(x1, x2, x_out)
    factor = 1.0 + (lam * lam / 192.0) * (mu - 1.0) ** 2
    return KernelSample(base.x1, base.x2, base.x_out, base.value * factor)


def _insertion_values(f, dim: int) -> np.ndarray:
    """Diagonal insertion f(n) as a complex vector of length dim."""
    if f is None:
        return np.ones(dim, dtype=np.complex128)
    if isinstance(f, NonlinearityFunction):
        return f.values(dim).astype(np.complex128)
    if callable(f):
        return np.asarray([f(n) for n in range(dim)], dtype=np.complex128)
    arr = np.asarray(f, dtype=np.complex128)
    if arr.ndim != 1 or arr.shape[0] < dim:
        raise ValidationError(
            f"diagonal insertion must provide at least dim={dim} values, got shape {arr.shape}"
        )
    return arr[:dim]


def _insertion_tail_check(values: np.ndarray, schedule: DampingSchedule, dim: int):
    weights = np.abs(values) * np.exp(-schedule.min_epsilon * np.arange(dim))
    peak = weights.max()
    if peak > 0.0 and weights[-1] > 1e-2 * peak:
        warnings.warn(
            f"damped insertion weight at the truncation edge is {weights[-1] / peak:.1e} "
            f"of its peak; increase dim until |f(n)| e^(-eps_min n) has decayed",
            TruncationWarning,
        )


def kernel_numeric(
    f,
    x1,
    x2,
    x_out,
    dim: int = DEFAULT_KERNEL_DIM,
    schedule: DampingSchedule | None = None,
) -> KernelSample:
    """Regularized trace of dequantizer(x1) diag(f) dequantizer(x2) quantizer(x_out).

    With f = 1 this is the numeric Groenewold kernel.  `f` may be a
    NonlinearityFunction, a callable, or a plain vector of diagonal values
    (complex allowed).  Non-convergent extrapolation flags the sample; the
    value is still reported.
    """
    if schedule is None:
        schedule = DampingSchedule.default()
    x1, x2, x_out = _point(x1), _point(x2), _point(x_out)
    values = _insertion_values(f, dim)
    _insertion_tail_check(values, schedule, dim)
    d1 = dequantizer(x1, dim).matrix
    d2 = dequantizer(x2, dim).matrix
    u = quantizer(x_out, dim).matrix
    # only the diagonal of D1 f D2 U feeds the damped trace
    rest = values[:, None] * (d2 @ u)
    diag = np.einsum("nm,mn->n", d1, rest)
    result = damped_trace_from_diagonal(diag, schedule)
    return KernelSample(
        x1, x2, x_out,
        value=result.value,
        error_estimate=result.error_estimate,
        converged=result.converged,
    )


def tau_kernel(
    tau: float,
    x1,
    x2,
    x_out,
    dim: int = DEFAULT_KERNEL_DIM,
    schedule: DampingSchedule | None = None,
) -> KernelSample:
    """Generating-function kernel with insertion e^{i tau n}.

    At tau = 0 this is exactly the numeric Groenewold kernel; minus the second
    central difference in tau at 0 reproduces the n^2 insertion up to O(h^2).
    """
    phases = np.exp(1j * float(tau) * np.arange(dim))
    return kernel_numeric(phases, x1, x2, x_out, dim, schedule)


@dataclass(frozen=True)
class DeformationReport:
    """Trace-route ratio versus the deformed-kernel prediction at one triple."""

    x1: PhasePoint
    x2: PhasePoint
    x_out: PhasePoint
    mu: float
    ratio_numeric: complex
    ratio_reference: float
    difference: float
    error_estimate: float
    base_sample: KernelSample
    insertion_sample: KernelSample


def deformation_check(
    x1,
    x2,
    x_out,
    dim: int = DEFAULT_INSERTION_DIM,
    schedule: DampingSchedule | None = None,
) -> DeformationReport:
    """Compare R = K_num(n^2) / K_num(1) with the prediction (mu - 1)^2 / 16.

    The prediction is the lambda-independent ratio implied by the deformed
    analytic kernel with f = 1 + (lambda^2/12) n^2.  A persistent mismatch is
    a finding about the closed form, not an error of the trace route.
    """
    x1, x2, x_out = _point(x1), _point(x2), _point(x_out)
    n = np.arange(dim, dtype=np.float64)
    base = kernel_numeric(np.ones(dim), x1, x2, x_out, dim, schedule)
    inserted = kernel_numeric(n**2, x1, x2, x_out, dim, schedule)
    if abs(base.value) <= 10.0 * base.error_estimate:
        raise IllConditionedError(
            f"|K(f=1)| = {abs(base.value):.3e} is below 10x its error estimate "
            f"{base.error_estimate:.3e}; the ratio is ill-conditioned"
        )
    ratio = inserted.value / base.value
    mu = mu_invariant(x1, x2, x_out)
    reference = (mu - 1.0) ** 2 / 16.0
    err = (
        abs(inserted.value) * base.error_estimate + abs(base.value) * inserted.error_estimate
    ) / abs(base.value) ** 2
    return DeformationReport(
        x1=x1, x2=x2, x_out=x_out,
        mu=mu,
        ratio_numeric=complex(ratio),
        ratio_reference=reference,
        difference=float(abs(ratio - reference)),
        error_estimate=float(err),
        base_sample=base,
        insertion_sample=inserted,
    )


def fit_mu_quadratic(mus, ratios) -> tuple:
    """Least-squares quadratic c0 + c1 mu + c2 mu^2 through measured ratios."""
    mus = np.asarray(mus, dtype=np.float64)
    vals = np.real(np.asarray(ratios))
    coeffs = np.polynomial.polynomial.polyfit(mus, vals, 2)
    return tuple(float(c) for c in coeffs)


def structure_constants(
    x1,
    x2,
    x_out,
    kind: str = "groenewold",
    lam: float = 0.0,
) -> StructureSample:
    """C(x1, x2; x) = K(x1, x2; x) - K(x2, x1; x) for the analytic kernel `kind`.

    The deformed factor is symmetric under the 1 <-> 2 swap, so the lambda
    kind is the Groenewold constant times that common factor; it reduces to
    the Groenewold kind exactly at mu = 1 and at lambda = 0.
    """
    if kind == "groenewold":
        k12 = groenewold_analytic(x1, x2, x_out)
        k21 = groenewold_analytic(x2, x1, x_out)
    elif kind == "lambda":
        k12 = lambda_kernel_analytic(lam, x1, x2, x_out)
        k21 = lambda_kernel_analytic(lam, x2, x1, x_out)
    else:
        raise ValidationError(f"structure-constant kind must be groenewold or lambda, got {kind!r}")
    return StructureSample(_point(x1), _point(x2), _point(x_out), k12.value - k21.value)


def seeded_triples(count: int, seed: int = DEFAULT_SEED, bound: float = 1.0) -> list:
    """Reproducible uniform point triples with coordinates in [-bound, bound]."""
    rng = np.random.default_rng(seed)
    coords = rng.uniform(-bound, bound, size=(count, 6))
    return [
        (PhasePoint(c[0], c[1]), PhasePoint(c[2], c[3]), PhasePoint(c[4], c[5]))
        for c in coords
    ]


def load_triples(source) -> list:
    """Triples from JSON: either {"triples": [{...}]} or a bare array of objects."""
    if isinstance(source, (str, bytes)):
        payload = json.loads(source)
    else:
        payload = source
    if isinstance(payload, dict):
        payload = payload.get("triples")
        if payload is None:
            raise ValidationError('triples JSON object must carry a "triples" array')
    if not isinstance(payload, list):
        raise ValidationError("triples JSON must be an array of {q1,p1,q2,p2,q,p} objects")
    out = []
    for row in payload:
        try:
            out.append(
                (
                    PhasePoint(row["q1"], row["p1"]),
                    PhasePoint(row["q2"], row["p2"]),
                    PhasePoint(row["q"], row["p"]),
                )
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed triple entry {row!r}") from exc
    return out


def write_kernel_csv(samples, path) -> None:
    """Batch output, columns q1,p1,q2,p2,q,p,re,im,err in that exact order."""
    with open(str(path), "w") as fh:
        fh.write("q1,p1,q2,p2,q,p,re,im,err\n")
        for s in samples:
            fh.write(
                f"{s.x1.q!r},{s.x1.p!r},{s.x2.q!r},{s.x2.p!r},"
                f"{s.x_out.q!r},{s.x_out.p!r},"
                f"{s.value.real!r},{s.value.imag!r},{s.error_estimate!r}\n"
            )
