"""Gundy-Stein decomposition with explicit constants on finite atomic filtrations."""

from ._kernels import backend_name
from .certify import Certificate, CheckRecord
from .decomposition import (
    RawFunction,
    crossing_data,
    decompose_positive,
    decompose_raw,
    decompose_signed,
    first_passage,
    verify_bounds,
    verify_signed,
)
from .errors import DomainError, FiltrationError, GundySteinError, MeasurabilityError
from .filtration import (
    NEVER,
    Filtration,
    check_alpha_regular,
    conditional_expectation,
    evaluate_stopped,
    martingale,
    martingale_differences,
)
from .generate import GeneratorConfig, generate
from .io import dump_instance, load_instance, parse_instance
from .suite import SuiteConfig, VerificationReport, run_suite

__version__ = "0.1.0"
