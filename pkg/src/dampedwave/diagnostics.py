"""Energy and virial diagnostics of the damped Klein-Gordon flow.

Every scalar the a priori estimates manipulate is computed here from a single
state: the energy ``E``, its quadratic part ``E_lin``, the virial quantity
``M = ‖u‖²``, ``M' = 2∫u ∂ₜu`` and ``M''`` from the closed formula

    M'' = 2‖∂ₜu‖² - 2‖u‖²_{H₀¹} + 2∫u f(u) - 2∫γ u ∂ₜu.

``M''`` is never obtained by differencing, so comparing it against finite
differences of sampled ``M`` is an independent check of the integrator.
"""

from dataclasses import asdict, dataclass, fields
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
import numpy.typing as npt
import pandas as pd

from .domain import GridField, SpectralDomain, SpectralField
from .errors import FieldShapeError, InsufficientSamplesError
from .nonlinearity import F_eval, NonlinearitySpec, f_eval


CSV_COLUMNS = (
    "t",
    "E",
    "E_lin",
    "M",
    "Mp",
    "Mpp",
    "l2_u",
    "l2_v",
    "h1_u",
    "intF",
    "intUf",
    "intGuv",
    "intGvv",
)

DEFAULT_PAD_FACTOR = 1.5


@dataclass(frozen=True, eq=False)
class WaveState:
    """``(t, u, ∂ₜu)`` on a domain; spectral mirrors are computed once on demand."""

    t: float
    u: GridField
    v: GridField
    domain: SpectralDomain

    def __post_init__(self) -> None:
        """Reject fields that do not live on ``domain``."""
        for name in ("u", "v"):
            value = getattr(self, name)
            if value.shape != self.domain.shape:
                raise FieldShapeError(
                    f"{name} has shape {value.shape}, domain expects "
                    f"{self.domain.shape}"
                )

    @classmethod
    def from_spectral(
        cls,
        t: float,
        u_hat: SpectralField,
        v_hat: SpectralField,
        domain: SpectralDomain,
    ) -> "WaveState":
        """Build a state from amplitudes, keeping them as the cached mirrors."""
        state = cls(t=t, u=domain.to_grid(u_hat), v=domain.to_grid(v_hat), domain=domain)
        state.__dict__["u_hat"] = u_hat
        state.__dict__["v_hat"] = v_hat
        return state

    @classmethod
    def zeros(cls, domain: SpectralDomain, t: float = 0.0) -> "WaveState":
        """The trivial state."""
        return cls(t=t, u=np.zeros(domain.shape), v=np.zeros(domain.shape), domain=domain)

    @cached_property
    def u_hat(self) -> SpectralField:
        """Spectral mirror of ``u``."""
        return self.domain.to_spectral(self.u)

    @cached_property
    def v_hat(self) -> SpectralField:
        """Spectral mirror of ``∂ₜu``."""
        return self.domain.to_spectral(self.v)

    def is_finite(self) -> bool:
        """True when no entry is NaN or infinite."""
        return bool(np.isfinite(self.u).all() and np.isfinite(self.v).all())


@dataclass(frozen=True, eq=False)
class DampingProfile:
    """Nonnegative damping coefficient ``γ ∈ L^∞`` sampled on the grid."""

    gamma: GridField

    def __post_init__(self) -> None:
        """Check ``γ ≥ 0`` pointwise and finite."""
        if not np.isfinite(self.gamma).all():
            raise ValueError("damping must be finite")
        if (self.gamma < 0).any():
            raise ValueError("damping must be nonnegative: γ ≥ 0")

    @classmethod
    def constant(cls, domain: SpectralDomain, value: float) -> "DampingProfile":
        """``γ ≡ value``."""
        return cls(gamma=np.full(domain.shape, float(value)))

    @classmethod
    def indicator(
        cls,
        domain: SpectralDomain,
        value: float,
        lower: "Sequence[float]",
        upper: "Sequence[float]",
    ) -> "DampingProfile":
        """``γ = value · 𝟙_B`` for the axis-aligned box ``B = Π[lowerⱼ, upperⱼ]``."""
        if len(lower) != domain.d or len(upper) != domain.d:
            raise ValueError(f"indicator box needs {domain.d} bounds per side")
        mask = np.ones(domain.shape, dtype=bool)
        for coord, lo, hi in zip(domain.grid(), lower, upper):
            mask &= (coord >= lo) & (coord <= hi)
        return cls(gamma=np.where(mask, float(value), 0.0))

    @property
    def gamma_inf(self) -> float:
        """``‖γ‖_{L^∞}``."""
        return float(self.gamma.max()) if self.gamma.size else 0.0

    @property
    def is_uniform(self) -> bool:
        """True when γ is spatially constant."""
        return bool(np.all(self.gamma == self.gamma.flat[0]))


@dataclass(frozen=True, slots=True)
class DiagnosticsSample:
    """One time row of the diagnostics; field order is the CSV column order."""

    t: float
    E: float
    E_lin: float
    M: float
    Mp: float
    Mpp: float
    l2_u: float
    l2_v: float
    h1_u: float
    intF: float
    intUf: float
    intGuv: float
    intGvv: float

    @property
    def energy_space_norm(self) -> float:
        """``‖(u, ∂ₜu)‖_{H₀¹×L²}``."""
        return float(np.sqrt(max(self.h1_u + self.l2_v, 0.0)))


def potential_integrals(
    state: WaveState,
    spec: NonlinearitySpec,
    dealias: bool,
    pad_factor: float,
) -> tuple[float, float]:
    """Return ``(∫F(u), ∫u f(u))`` on the padded grid when dealiasing."""
    if spec.is_zero:
        return 0.0, 0.0
    dom = state.domain
    if dealias:
        quad = dom.padded(pad_factor)
        u = quad.to_grid(dom.pad(state.u_hat, quad))
    else:
        quad, u = dom, state.u
    int_F = quad.cell_volume * float(np.sum(F_eval(spec, u)))
    int_uf = quad.cell_volume * float(np.sum(u * f_eval(spec, u)))
    return int_F, int_uf


def energy(
    state: WaveState,
    spec: NonlinearitySpec,
    dom: SpectralDomain | None = None,
    dealias: bool = True,
    pad_factor: float = DEFAULT_PAD_FACTOR,
) -> float:
    """``E = ½‖u‖²_{H₀¹} + ½‖∂ₜu‖²_{L²} - ∫F(u)``."""
    dom = dom or state.domain
    int_F, _ = potential_integrals(state, spec, dealias, pad_factor)
    return (
        0.5 * dom.spectral_h1_norm_sq(state.u_hat)
        + 0.5 * dom.spectral_l2_norm_sq(state.v_hat)
        - int_F
    )


def virial_sample(
    state: WaveState,
    spec: NonlinearitySpec,
    dom: SpectralDomain | None,
    damping: DampingProfile,
    dealias: bool = True,
    pad_factor: float = DEFAULT_PAD_FACTOR,
) -> DiagnosticsSample:
    """Compute every diagnostic of ``state``.

    Bilinear quantities are exact (Parseval); ``∫F`` and ``∫u f(u)`` use the
    zero-padded grid when ``dealias``; the damping integrals use the native
    grid, matching the pointwise damping substep of the integrator.
    """
    dom = dom or state.domain
    h1_u = dom.spectral_h1_norm_sq(state.u_hat)
    l2_u = dom.spectral_l2_norm_sq(state.u_hat)
    l2_v = dom.spectral_l2_norm_sq(state.v_hat)
    int_F, int_uf = potential_integrals(state, spec, dealias, pad_factor)
    int_guv = dom.inner_product(damping.gamma * state.u, state.v)
    int_gvv = dom.inner_product(damping.gamma * state.v, state.v)
    e_lin = 0.5 * h1_u + 0.5 * l2_v
    return DiagnosticsSample(
        t=float(state.t),
        E=e_lin - int_F,
        E_lin=e_lin,
        M=l2_u,
        Mp=2.0 * dom.inner_product(state.u, state.v),
        Mpp=2.0 * l2_v - 2.0 * h1_u + 2.0 * int_uf - 2.0 * int_guv,
        l2_u=l2_u,
        l2_v=l2_v,
        h1_u=h1_u,
        intF=int_F,
        intUf=int_uf,
        intGuv=int_guv,
        intGvv=int_gvv,
    )


def sample_spacing(samples: "Sequence[DiagnosticsSample]", rtol: float = 1e-6) -> float:
    """Return the uniform spacing of a sample series.

    Raises
    ------
    InsufficientSamplesError
        With fewer than two samples or non-uniform spacing.
    """
    if len(samples) < 2:
        raise InsufficientSamplesError(f"need at least 2 samples, got {len(samples)}")
    steps = np.diff([_s.t for _s in samples])
    spacing = float(steps.mean())
    if spacing <= 0 or np.abs(steps - spacing).max() > rtol * abs(spacing) + 1e-12:
        raise InsufficientSamplesError("samples are not uniformly spaced in time")
    return spacing


def dissipation_residual(
    samples: "Sequence[DiagnosticsSample]", dt: float | None = None
) -> float:
    """Worst defect of the energy equality over all sample pairs.

    With ``R_k = E(t_k) - E(t_0) + ∫_{t_0}^{t_k} ∫γ|∂ₜu|²`` (trapezoid in
    time), every pair ``i < j`` has defect ``|R_j - R_i|``; the maximum over
    pairs is ``max R - min R``.
    """
    spacing = sample_spacing(samples)
    if dt is not None and not np.isclose(dt, spacing, rtol=1e-6):
        raise InsufficientSamplesError(
            f"sample spacing {spacing} does not match dt={dt}"
        )
    energies = np.array([_s.E for _s in samples])
    rates = np.array([_s.intGvv for _s in samples])
    dissipated = np.concatenate(
        ([0.0], np.cumsum(0.5 * spacing * (rates[1:] + rates[:-1])))
    )
    residual = energies - energies[0] + dissipated
    return float(residual.max() - residual.min())


def finite_difference_virial(
    samples: "Sequence[DiagnosticsSample]",
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Centered differences of sampled ``M`` at interior sample times.

    Returns
    -------
    t, Mp_fd, Mpp_fd : numpy.ndarray
        Interior times and the centered first and second differences.
    """
    spacing = sample_spacing(samples)
    if len(samples) < 3:
        raise InsufficientSamplesError("centered differences need 3 samples")
    m = np.array([_s.M for _s in samples])
    t = np.array([_s.t for _s in samples])[1:-1]
    mp = (m[2:] - m[:-2]) / (2.0 * spacing)
    mpp = (m[2:] - 2.0 * m[1:-1] + m[:-2]) / spacing**2
    return t, mp, mpp


def samples_to_frame(samples: "Sequence[DiagnosticsSample]") -> pd.DataFrame:
    """Samples as a DataFrame with the frozen column order."""
    return pd.DataFrame([asdict(_s) for _s in samples], columns=list(CSV_COLUMNS))


def frame_to_samples(frame: pd.DataFrame) -> list[DiagnosticsSample]:
    """Inverse of :func:`samples_to_frame`."""
    missing = [name for name in CSV_COLUMNS if name not in frame.columns]
    if missing:
        raise ValueError(f"diagnostics frame lacks columns {missing}")
    names = [_f.name for _f in fields(DiagnosticsSample)]
    return [
        DiagnosticsSample(**{name: float(row[name]) for name in names})
        for row in frame.to_dict(orient="records")
    ]


def write_samples_csv(samples: "Sequence[DiagnosticsSample]", path: Path) -> None:
    """Write the series as CSV (``t,E,E_lin,M,Mp,Mpp,...``)."""
    samples_to_frame(samples).to_csv(path, index=False, float_format="%.17g")


def read_samples_csv(path: Path) -> list[DiagnosticsSample]:
    """Read a series written by :func:`write_samples_csv`."""
    return frame_to_samples(pd.read_csv(path))
