"""Strang-split time stepping of ``□u + γ∂ₜu + βu = f(u)`` with blow-up detection.

One step is ``L(dt/2) ∘ N(dt) ∘ L(dt/2)``:

- ``L`` is the exact linear Klein-Gordon flow, a rotation of ``(û_k, v̂_k)``
  with frequency ``ω_k = √(μ_k + β)`` per spectral mode.
- ``N`` freezes ``u`` and solves ``v̇ = f(u) - γv`` exactly pointwise.

Both sub-flows are closed form, so the only time discretization error is the
splitting commutator.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .checkpoint import write_checkpoint
from .diagnostics import (
    DEFAULT_PAD_FACTOR,
    DampingProfile,
    DiagnosticsSample,
    WaveState,
    virial_sample,
)
from .domain import GridField, SpectralDomain, SpectralField
from .errors import ConfigError
from .nonlinearity import NonlinearitySpec, f_eval


logger = logging.getLogger(__name__)

SMALL_DAMPING = 1e-8
HISTORY_LIMIT = 32


class StepperConfig(BaseModel):
    """Time stepping and blow-up detection settings."""

    model_config = ConfigDict(extra="forbid")

    dt: float = Field(gt=0.0)
    t_end: float = Field(gt=0.0)
    blowup_threshold: float = Field(default=1e6, gt=0.0)
    dealias: bool = True
    pad_factor: float = Field(default=DEFAULT_PAD_FACTOR, ge=1.0)
    sample_every: int = Field(default=1, ge=1)
    max_dt: float = Field(default=0.1, gt=0.0)
    confirm_blowup: bool = True

    @model_validator(mode="after")
    def _dt_resolves_nonlinear_substep(self) -> "StepperConfig":
        if self.dt > self.max_dt:
            raise ValueError(
                f"dt={self.dt} must resolve the nonlinear substep: dt ≤ max_dt={self.max_dt}"
            )
        return self


@dataclass
class RunOutcome:
    """Classification of a run and everything recorded along it."""

    kind: Literal["global", "blowup"]
    reason: Literal["horizon_reached", "norm_exceeded", "non_finite"]
    t_final: float
    samples: list[DiagnosticsSample]
    final_state: WaveState
    steps: int
    confirmed: bool | None = None
    snapshots: list[GridField] = field(default_factory=list)

    @property
    def is_global(self) -> bool:
        """True when the run reached its horizon."""
        return self.kind == "global"


def _kick_factors(
    gamma: npt.NDArray[np.float64] | float, dt: float
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Return ``(e^{-γdt}, (1 - e^{-γdt})/γ)``, the latter by series near γ = 0."""
    gamma = np.asarray(gamma, dtype=np.float64)
    x = gamma * dt
    small = np.abs(x) < SMALL_DAMPING
    safe_gamma = np.where(small, 1.0, gamma)
    phi = np.where(small, dt * (1.0 - 0.5 * x), -np.expm1(-x) / safe_gamma)
    return np.exp(-x), phi


class KleinGordonStepper:
    """Precomputed sub-flows for one (domain, nonlinearity, damping) triple.

    A stepper is owned by a single run; it memoizes the rotation and kick
    factors per step size.
    """

    def __init__(
        self,
        dom: SpectralDomain,
        spec: NonlinearitySpec,
        damping: DampingProfile,
        dealias: bool = True,
        pad_factor: float = DEFAULT_PAD_FACTOR,
    ) -> None:
        """Check that every mode oscillates and cache the frequencies."""
        omega_sq = dom.eigenvalues + dom.beta
        if (omega_sq <= 0).any():
            raise ConfigError(
                f"Poincaré: λ₁+β ≤ 0 (λ₁+β = {dom.lambda1 + dom.beta}); "
                "a mode with ω² ≤ 0 cannot be propagated"
            )
        if damping.gamma.shape != dom.shape:
            raise ConfigError(
                f"damping has shape {damping.gamma.shape}, domain expects {dom.shape}"
            )
        self.dom = dom
        self.spec = spec
        self.damping = damping
        self.omega = np.sqrt(omega_sq)
        self.quad = dom.padded(pad_factor) if dealias and not spec.is_zero else None
        self._rotations: dict[float, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        self._kicks: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    @property
    def is_linear_conservative(self) -> bool:
        """True when ``N`` is the identity (``f = 0`` and ``γ = 0``)."""
        return self.spec.is_zero and self.damping.gamma_inf == 0.0

    def _rotation(self, tau: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if tau not in self._rotations:
            phase = self.omega * tau
            cos, sin = np.cos(phase), np.sin(phase)
            self._rotations[tau] = (cos, sin / self.omega, self.omega * sin)
        return self._rotations[tau]

    def _kick(self, dt: float) -> tuple[np.ndarray, np.ndarray]:
        if dt not in self._kicks:
            gamma = (
                self.damping.gamma.flat[0] if self.damping.is_uniform else self.damping.gamma
            )
            self._kicks[dt] = _kick_factors(gamma, dt)
        return self._kicks[dt]

    def linear_flow(
        self, u_hat: SpectralField, v_hat: SpectralField, tau: float
    ) -> tuple[SpectralField, SpectralField]:
        """Exact free flow over ``tau`` (any sign)."""
        cos, sin_over_omega, omega_sin = self._rotation(tau)
        return (
            cos * u_hat + sin_over_omega * v_hat,
            cos * v_hat - omega_sin * u_hat,
        )

    def forcing_hat(self, u_hat: SpectralField) -> SpectralField:
        """Spectral amplitudes of ``f(u)``, evaluated on the padded grid if dealiasing."""
        if self.quad is None:
            return self.dom.to_spectral(f_eval(self.spec, self.dom.to_grid(u_hat)))
        u_pad = self.quad.to_grid(self.dom.pad(u_hat, self.quad))
        f_hat_pad = self.quad.to_spectral(f_eval(self.spec, u_pad))
        return self.dom.truncate(f_hat_pad, self.quad)

    def nonlinear_flow(
        self, u_hat: SpectralField, v_hat: SpectralField, dt: float
    ) -> SpectralField:
        """Exact solution of ``u̇ = 0, v̇ = f(u) - γv`` over ``dt``; returns new ``v̂``."""
        if self.is_linear_conservative:
            return v_hat
        decay, phi = self._kick(dt)

        if self.damping.is_uniform:
            if self.spec.is_zero:
                return decay * v_hat
            return decay * v_hat + phi * self.forcing_hat(u_hat)

        v = self.dom.to_grid(v_hat)
        if self.spec.is_zero:
            return self.dom.to_spectral(decay * v)
        if self.quad is None:
            force = f_eval(self.spec, self.dom.to_grid(u_hat))
        else:
            force = self.dom.to_grid(self.forcing_hat(u_hat))
        return self.dom.to_spectral(decay * v + phi * force)

    def step(
        self, u_hat: SpectralField, v_hat: SpectralField, dt: float
    ) -> tuple[SpectralField, SpectralField]:
        """One Strang step ``L(dt/2) ∘ N(dt) ∘ L(dt/2)``."""
        u_hat, v_hat = self.linear_flow(u_hat, v_hat, 0.5 * dt)
        v_hat = self.nonlinear_flow(u_hat, v_hat, dt)
        return self.linear_flow(u_hat, v_hat, 0.5 * dt)

    def energy_space_norm(self, u_hat: SpectralField, v_hat: SpectralField) -> float:
        """``√(‖u‖²_{H₀¹} + ‖∂ₜu‖²_{L²})``; NaN/inf propagate."""
        return math.sqrt(
            max(
                self.dom.spectral_h1_norm_sq(u_hat) + self.dom.spectral_l2_norm_sq(v_hat),
                0.0,
            )
        )


def linear_half_step(dom: SpectralDomain, state: WaveState, tau: float) -> WaveState:
    """Advance ``state`` by the free Klein-Gordon flow over ``tau``."""
    stepper = KleinGordonStepper(
        dom, NonlinearitySpec(), DampingProfile.constant(dom, 0.0), dealias=False
    )
    u_hat, v_hat = stepper.linear_flow(state.u_hat, state.v_hat, tau)
    return WaveState.from_spectral(state.t + tau, u_hat, v_hat, dom)


def nonlinear_damping_step(
    state: WaveState,
    spec: NonlinearitySpec,
    damping: DampingProfile,
    dt: float,
    dealias: bool = True,
    pad_factor: float = DEFAULT_PAD_FACTOR,
) -> WaveState:
    """Apply the damped kick ``v ← e^{-γdt}v + f(u)(1 - e^{-γdt})/γ``.

    ``u`` and ``t`` are unchanged; non-finite output is left for the caller to
    classify as blow-up.
    """
    stepper = KleinGordonStepper(state.domain, spec, damping, dealias, pad_factor)
    v_hat = stepper.nonlinear_flow(state.u_hat, state.v_hat, dt)
    return WaveState.from_spectral(state.t, state.u_hat, v_hat, state.domain)


def strang_step(stepper: KleinGordonStepper, state: WaveState, dt: float) -> WaveState:
    """One Strang step of ``state``; ``dt < 0`` runs backwards in time."""
    u_hat, v_hat = stepper.step(state.u_hat, state.v_hat, dt)
    return WaveState.from_spectral(state.t + dt, u_hat, v_hat, stepper.dom)


class _History:
    """Sparse record of past states, thinned so spacing stays below 1/16 of the run."""

    def __init__(self) -> None:
        self.stride = 1
        self.entries: list[tuple[int, float, SpectralField, SpectralField]] = []

    def add(self, step: int, t: float, u_hat: SpectralField, v_hat: SpectralField) -> None:
        if step % self.stride:
            return
        self.entries.append((step, t, u_hat, v_hat))
        if len(self.entries) > HISTORY_LIMIT:
            self.entries = self.entries[::2]
            self.stride *= 2

    def latest_before(self, t: float) -> tuple[float, SpectralField, SpectralField]:
        candidates = [_e for _e in self.entries if _e[1] <= t] or self.entries[:1]
        _, t_start, u_hat, v_hat = candidates[-1]
        return t_start, u_hat, v_hat


def _confirm_blowup(
    stepper: KleinGordonStepper,
    history: _History,
    t_start: float,
    t_star: float,
    cfg: StepperConfig,
) -> bool:
    """Re-run the final 10% at ``dt/2``; True if the threshold is crossed again."""
    t_from, u_hat, v_hat = history.latest_before(t_start + 0.9 * (t_star - t_start))
    half = 0.5 * cfg.dt
    horizon = t_star + 0.1 * (t_star - t_start) + cfg.dt
    for _ in range(math.ceil((horizon - t_from) / half)):
        u_hat, v_hat = stepper.step(u_hat, v_hat, half)
        norm = stepper.energy_space_norm(u_hat, v_hat)
        if not math.isfinite(norm) or norm > cfg.blowup_threshold:
            return True
    return False


def evolve(
    initial: WaveState,
    spec: NonlinearitySpec,
    dom: SpectralDomain,
    damping: DampingProfile,
    cfg: StepperConfig,
    observer: Callable[[WaveState], None] | None = None,
    snapshot_every: int = 0,
    checkpoint_dir: Path | None = None,
    checkpoint_every: int = 0,
) -> RunOutcome:
    """Integrate from ``initial`` until ``cfg.t_end`` or blow-up detection.

    Parameters
    ----------
    initial : WaveState
        Starting state; ``initial.t`` may be positive when resuming.
    spec, dom, damping : NonlinearitySpec, SpectralDomain, DampingProfile
        The equation.
    cfg : StepperConfig
        Step size, horizon, sampling cadence and blow-up threshold.
    observer : callable, optional
        Called with the state at every sample.
    snapshot_every : int
        Keep the grid ``u`` of every ``snapshot_every``-th sample (0 disables).
    checkpoint_dir : pathlib.Path, optional
        Where to write checkpoints every ``checkpoint_every`` steps, named by
        the step count since ``t = 0``.

    Returns
    -------
    RunOutcome
        ``global`` when ``t_end`` is reached; ``blowup`` when
        ``√(‖u‖²_{H₀¹} + ‖∂ₜu‖²)`` exceeds the threshold or turns non-finite.
    """
    stepper = KleinGordonStepper(dom, spec, damping, cfg.dealias, cfg.pad_factor)
    t_start = float(initial.t)
    exact_steps = (cfg.t_end - t_start) / cfg.dt
    n_steps = max(0, round(exact_steps))
    if exact_steps > 0 and not math.isclose(n_steps, exact_steps, rel_tol=1e-9, abs_tol=1e-6):
        logger.warning(
            "t_end - t=%.6g is not a multiple of dt=%.6g; stopping at t=%.6g",
            cfg.t_end - t_start,
            cfg.dt,
            t_start + n_steps * cfg.dt,
        )
    # checkpoint names count steps from t = 0, across resumes
    step_offset = round(t_start / cfg.dt)
    samples: list[DiagnosticsSample] = []
    snapshots: list[GridField] = []
    history = _History()

    def record(state: WaveState) -> None:
        samples.append(
            virial_sample(state, spec, dom, damping, cfg.dealias, cfg.pad_factor)
        )
        if snapshot_every and (len(samples) - 1) % snapshot_every == 0:
            snapshots.append(state.u)
        if observer is not None:
            observer(state)

    logger.info(
        "evolving %r from t=%.6g to t=%.6g with dt=%.3g (%d steps)",
        dom,
        t_start,
        cfg.t_end,
        cfg.dt,
        n_steps,
    )
    u_hat, v_hat = initial.u_hat, initial.v_hat
    record(WaveState.from_spectral(t_start, u_hat, v_hat, dom))
    history.add(0, t_start, u_hat, v_hat)

    reason: Literal["horizon_reached", "norm_exceeded", "non_finite"] = "horizon_reached"
    t_final = t_start
    step = 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for step in range(1, n_steps + 1):
            previous = (t_final, u_hat, v_hat)
            u_hat, v_hat = stepper.step(u_hat, v_hat, cfg.dt)
            t_final = t_start + step * cfg.dt
            norm = stepper.energy_space_norm(u_hat, v_hat)
            if not math.isfinite(norm):
                reason = "non_finite"
                break
            if norm > cfg.blowup_threshold:
                reason = "norm_exceeded"
                break

            history.add(step, t_final, u_hat, v_hat)
            if step % cfg.sample_every == 0:
                record(WaveState.from_spectral(t_final, u_hat, v_hat, dom))
            global_step = step_offset + step
            if checkpoint_dir is not None and checkpoint_every and global_step % checkpoint_every == 0:
                write_checkpoint(
                    WaveState.from_spectral(t_final, u_hat, v_hat, dom),
                    Path(checkpoint_dir) / f"ckpt_{global_step:09d}.bin",
                )

        if reason == "horizon_reached":
            logger.info("global until t=%.6g", t_final)
            return RunOutcome(
                kind="global",
                reason=reason,
                t_final=t_final,
                samples=samples,
                final_state=WaveState.from_spectral(t_final, u_hat, v_hat, dom),
                steps=step,
                snapshots=snapshots,
            )

        confirmed = None
        if cfg.confirm_blowup:
            confirmed = _confirm_blowup(stepper, history, t_start, t_final, cfg)
            if not confirmed:
                logger.warning(
                    "blow-up at t=%.6g (%s) not reproduced at dt/2", t_final, reason
                )

    logger.info("blow-up detected at t=%.6g (%s)", t_final, reason)
    return RunOutcome(
        kind="blowup",
        reason=reason,
        t_final=t_final,
        samples=samples,
        final_state=WaveState.from_spectral(*previous, dom),
        steps=step,
        confirmed=confirmed,
        snapshots=snapshots,
    )


def damped_mode_solution(
    a: float,
    b: float,
    omega0_sq: float,
    gamma: float,
    t: "float | npt.NDArray[np.float64]",
) -> "float | npt.NDArray[np.float64]":
    """Closed-form ``û(t)`` of ``û'' + γû' + ω₀²û = 0``, ``û(0)=a``, ``û'(0)=b``."""
    t = np.asarray(t, dtype=np.float64)
    envelope = np.exp(-0.5 * gamma * t)
    shifted = b + 0.5 * gamma * a
    disc = 0.25 * gamma**2 - omega0_sq
    if disc < 0:
        omega = math.sqrt(-disc)
        out = envelope * (a * np.cos(omega * t) + shifted / omega * np.sin(omega * t))
    elif disc == 0:
        out = envelope * (a + shifted * t)
    else:
        rate = math.sqrt(disc)
        out = envelope * (a * np.cosh(rate * t) + shifted / rate * np.sinh(rate * t))
    return out if out.ndim else float(out)
