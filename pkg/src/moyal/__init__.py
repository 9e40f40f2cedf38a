"""Star-product calculus on phase space over truncated Fock space.

Quantizer/dequantizer symbol maps, Wigner functions, the Groenewold kernel
and its nonlinear deformations, the associative K-product, and f/q-oscillator
algebra, with a compiled hot-kernel core and a pure-numpy fallback.
"""

__version__ = "0.1.0"

from ._backend import available_backends, backend_name
from .errors import (
    AliasingWarning,
    BoundaryDecayWarning,
    ConfigError,
    ContractViolationError,
    DimensionError,
    IllConditionedError,
    MoyalError,
    NonConvergentWarning,
    NumericsWarning,
    PositivityError,
    PrecisionError,
    ScheduleError,
    ShapeError,
    TruncationWarning,
    ValidationError,
)
from .fock import (
    DampedTraceResult,
    DampingSchedule,
    FockOperator,
    adjoint,
    annihilator,
    coherent_projector,
    coherent_state,
    creator,
    damped_trace,
    displacement,
    fock_projector,
    identity,
    multiply,
    number_operator,
    parity_operator,
    vacuum_projector,
)
from .foscillator import (
    AmplitudeState,
    NonlinearityFunction,
    commutator_spectrum,
    deformed_annihilator,
    deformed_creator,
    evolve_amplitude,
    k_context_from_f,
)
from .kernels import (
    DeformationReport,
    KernelSample,
    StructureSample,
    deformation_check,
    fit_mu_quadratic,
    groenewold_analytic,
    kernel_numeric,
    lambda_kernel_analytic,
    load_triples,
    mu_invariant,
    seeded_triples,
    structure_constants,
    tau_kernel,
    write_kernel_csv,
)
from .kproduct import (
    KContext,
    k_associativity_defect,
    k_integral_product,
    k_multiply,
    k_unit,
    sqrt_k_transport,
)
from .starcalc import StarConfig, jacobi_defect, moyal_bracket, star
from .weyl import (
    PhaseGrid,
    PhasePoint,
    SymbolField,
    dequantizer,
    operator_of,
    quantizer,
    symbol_of,
    wigner,
)
