"""Exact verification of Efron-Stein type inequalities for dependent pairs."""

from .engine import SidesReport, compute_sides, verify
from .errors import (
    ComplexityError,
    ConvergenceError,
    DecompositionError,
    ESVerifyError,
    ModelError,
)
from .flows import CycleDecomposition, decompose_cycles, is_circulation, refined_constant
from .harmonic import (
    FourierCoefficients,
    RhoResult,
    fourier_transform,
    rho,
    rho_bound_check,
    rotation_ratio,
    shift_eigenvalue,
)
from .model import (
    FunctionTable,
    PairLaw,
    ProductModel,
    build_builtin,
    build_function,
    parse_function,
    parse_model,
    serialize_model,
)
from .spectral import (
    Certificate,
    QuadraticForms,
    WorstCase,
    assemble_forms,
    certify,
    max_generalized_eigenvalue,
)

__version__ = "0.1.0"
