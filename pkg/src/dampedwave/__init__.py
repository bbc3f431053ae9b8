"""Pseudospectral simulation and estimate verification for damped focusing
Klein-Gordon equations ``□u + γ∂ₜu + βu = f(u)``."""

from .diagnostics import (
    DampingProfile,
    DiagnosticsSample,
    WaveState,
    dissipation_residual,
    energy,
    virial_sample,
)
from .domain import SpectralDomain
from .errors import (
    CheckpointFormatError,
    ConfigError,
    DampedWaveError,
    EstimateInapplicableError,
    FieldShapeError,
    InsufficientSamplesError,
)
from .integrator import KleinGordonStepper, RunOutcome, StepperConfig, evolve
from .nonlinearity import NonlinearitySpec, PowerTerm, hypothesis_report
from .verifier import EstimateVerdict
