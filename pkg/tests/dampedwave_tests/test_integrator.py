"""Tests for the split-step integrator and blow-up detection."""

import logging
import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.dampedwave.checkpoint import read_checkpoint
from src.dampedwave.diagnostics import DampingProfile, WaveState
from src.dampedwave.domain import SpectralDomain
from src.dampedwave.errors import ConfigError
from src.dampedwave.initial_data import mode_superposition, random_state
from src.dampedwave.integrator import (
    KleinGordonStepper,
    StepperConfig,
    _kick_factors,
    damped_mode_solution,
    evolve,
    linear_half_step,
    nonlinear_damping_step,
    strang_step,
)
from src.dampedwave.nonlinearity import NonlinearitySpec
from src.dampedwave.verifier import check_energy_monotone_and_bounded


ZERO_MAP = NonlinearitySpec()


def _final_u_hat(dom, spec, damping, initial, dt, t_end):
    cfg = StepperConfig(dt=dt, t_end=t_end, sample_every=1000, confirm_blowup=False)
    return evolve(initial, spec, dom, damping, cfg).final_state.u_hat


def test_free_mode_is_exact(cube: SpectralDomain):
    """A linear undamped mode follows ``cos(√3 t)`` to round-off at any step size."""
    stepper = KleinGordonStepper(cube, ZERO_MAP, DampingProfile.constant(cube, 0.0))
    state = mode_superposition(cube, [((1, 1, 1), 1.0, 0.0)])
    for _ in range(100):
        state = strang_step(stepper, state, 0.1)
    assert state.t == pytest.approx(10.0)
    assert state.u_hat[0, 0, 0] == pytest.approx(math.cos(math.sqrt(3.0) * 10.0), abs=1e-10)
    assert stepper.is_linear_conservative


def test_linear_half_steps_compose(cube: SpectralDomain):
    """``L(0.3) ∘ L(0.2) = L(0.5)``."""
    state = random_state(cube, seed=3, amplitude=1.0, velocity_amplitude=0.5)
    two = linear_half_step(cube, linear_half_step(cube, state, 0.2), 0.3)
    one = linear_half_step(cube, state, 0.5)
    np.testing.assert_allclose(two.u, one.u, atol=1e-13)
    np.testing.assert_allclose(two.v, one.v, atol=1e-13)
    assert two.t == pytest.approx(0.5)


def test_damped_kick_closed_form(cube, cubic, fundamental):
    """``v ← e^{-γdt}v + f(u)(1 - e^{-γdt})/γ`` with u frozen; at u = 2 the kick is 8(1 - e^{-0.1})."""
    u = 2.0 * fundamental
    v0 = 0.5 * fundamental
    state = WaveState(t=0.3, u=u, v=v0, domain=cube)
    kicked = nonlinear_damping_step(
        state, cubic, DampingProfile.constant(cube, 1.0), 0.1, dealias=False
    )
    expected = math.exp(-0.1) * v0 + u**3 * (1.0 - math.exp(-0.1))
    np.testing.assert_allclose(kicked.v, expected, atol=1e-12)
    np.testing.assert_allclose(kicked.u, u, atol=1e-13)
    assert kicked.t == 0.3


def test_undamped_kick_is_euler(cube, cubic, fundamental):
    """Without damping the kick is ``v + dt f(u)``."""
    state = WaveState(t=0.0, u=fundamental, v=np.zeros(cube.shape), domain=cube)
    kicked = nonlinear_damping_step(
        state, cubic, DampingProfile.constant(cube, 0.0), 0.05, dealias=False
    )
    np.testing.assert_allclose(kicked.v, 0.05 * fundamental**3, atol=1e-13)


def test_kick_factors_are_continuous_at_zero_damping():
    """The series branch agrees with ``(1 - e^{-γdt})/γ`` and tends to dt."""
    gamma = np.array([0.0, 1e-12, 1e-6, 1e-3, 1.0])
    decay, phi = _kick_factors(gamma, 0.1)
    np.testing.assert_allclose(decay, np.exp(-0.1 * gamma))
    expected = np.where(gamma > 0, -np.expm1(-0.1 * gamma) / np.where(gamma > 0, gamma, 1.0), 0.1)
    np.testing.assert_allclose(phi, expected, rtol=1e-12)


def test_non_uniform_pure_damping(cube, fundamental):
    """With f = 0 an indicator damping scales v pointwise."""
    damping = DampingProfile.indicator(cube, 2.0, [0.0, 0.0, 0.0], [1.5, math.pi, math.pi])
    state = WaveState(t=0.0, u=fundamental, v=fundamental, domain=cube)
    kicked = nonlinear_damping_step(state, ZERO_MAP, damping, 0.1)
    np.testing.assert_allclose(kicked.v, np.exp(-0.2 * (damping.gamma > 0)) * fundamental, atol=1e-13)


@pytest.mark.parametrize("gamma", [0.0, 1.0])
def test_time_reversal(cube, cubic, gamma):
    """A step of -dt undoes a step of dt."""
    stepper = KleinGordonStepper(cube, cubic, DampingProfile.constant(cube, gamma))
    state = random_state(cube, seed=7, amplitude=0.5, velocity_amplitude=0.2)
    back = strang_step(stepper, strang_step(stepper, state, 0.01), -0.01)
    np.testing.assert_allclose(back.u, state.u, atol=1e-10)
    np.testing.assert_allclose(back.v, state.v, atol=1e-10)
    assert back.t == pytest.approx(0.0, abs=1e-15)


def test_second_order_convergence(cube, cubic):
    """Halving dt shrinks successive differences by about 4."""
    damping = DampingProfile.constant(cube, 1.0)
    initial = mode_superposition(cube, [((1, 1, 1), 1.0, 0.0), ((1, 2, 1), 0.3, 0.5)])
    coarse, mid, fine = (
        _final_u_hat(cube, cubic, damping, initial, dt, 2.0) for dt in (1e-2, 5e-3, 2.5e-3)
    )
    ratio = np.abs(coarse - mid).max() / np.abs(mid - fine).max()
    assert ratio == pytest.approx(4.0, rel=0.2)


def test_linear_damped_mode_matches_closed_form(cube):
    """Linear damped evolution of one mode is exact up to splitting error."""
    initial = mode_superposition(cube, [((1, 1, 1), 1.0, 0.0)])
    u_hat = _final_u_hat(cube, ZERO_MAP, DampingProfile.constant(cube, 1.0), initial, 1e-3, 1.0)
    exact = damped_mode_solution(1.0, 0.0, 3.0, 1.0, 1.0)
    assert u_hat[0, 0, 0] == pytest.approx(exact, abs=1e-6)


def test_evolve_records_samples_and_snapshots(cube, cubic):
    """Samples include t = 0, follow sample_every and feed the observer."""
    initial = mode_superposition(cube, [((1, 1, 1), 0.1, 0.0)])
    seen = []
    cfg = StepperConfig(dt=0.01, t_end=0.5, sample_every=5)
    outcome = evolve(
        initial,
        cubic,
        cube,
        DampingProfile.constant(cube, 1.0),
        cfg,
        observer=lambda state: seen.append(state.t),
        snapshot_every=2,
    )
    assert outcome.is_global and outcome.reason == "horizon_reached"
    assert outcome.steps == 50
    assert len(outcome.samples) == 11
    assert [_s.t for _s in outcome.samples] == pytest.approx(np.linspace(0.0, 0.5, 11))
    assert seen == pytest.approx(np.linspace(0.0, 0.5, 11))
    assert len(outcome.snapshots) == 6
    assert outcome.final_state.t == pytest.approx(0.5)


def test_zero_data_stays_zero(cube, cubic):
    """The trivial state is a fixed point."""
    outcome = evolve(
        WaveState.zeros(cube),
        cubic,
        cube,
        DampingProfile.constant(cube, 1.0),
        StepperConfig(dt=0.01, t_end=0.1),
    )
    assert outcome.is_global
    assert all(_s.E == 0.0 and _s.M == 0.0 for _s in outcome.samples)


def test_checkpoint_resume_matches_uninterrupted_run(tmp_path, cube, cubic):
    """Resuming from a mid-run checkpoint reaches the same final state."""
    damping = DampingProfile.constant(cube, 0.5)
    initial = random_state(cube, seed=2, amplitude=0.5)
    cfg = StepperConfig(dt=0.01, t_end=0.2)
    full = evolve(
        initial, cubic, cube, damping, cfg, checkpoint_dir=tmp_path, checkpoint_every=10
    )
    assert sorted(_p.name for _p in tmp_path.iterdir()) == [
        "ckpt_000000010.bin",
        "ckpt_000000020.bin",
    ]
    middle = read_checkpoint(tmp_path / "ckpt_000000010.bin", cube)
    assert middle.t == pytest.approx(0.1)
    resumed = evolve(middle, cubic, cube, damping, cfg)
    assert resumed.steps == 10
    np.testing.assert_allclose(resumed.final_state.u, full.final_state.u, atol=1e-12)
    np.testing.assert_allclose(resumed.final_state.v, full.final_state.v, atol=1e-12)


def test_dt_must_resolve_nonlinear_substep():
    """dt above max_dt is rejected."""
    with pytest.raises(ValidationError, match="must resolve the nonlinear substep"):
        StepperConfig(dt=0.5, t_end=1.0)


def test_stepper_rejects_massless_torus():
    """The constant Fourier mode has ω = 0 when β = 0."""
    dom = SpectralDomain(d=1, n=8, bc="periodic")
    with pytest.raises(ConfigError, match="Poincaré"):
        KleinGordonStepper(dom, ZERO_MAP, DampingProfile.constant(dom, 0.0))


def test_damped_mode_solution_regimes():
    """Under-, critically and over-damped closed forms."""
    t = np.linspace(0.0, 3.0, 7)
    np.testing.assert_allclose(
        damped_mode_solution(1.0, 0.0, 3.0, 0.0, t), np.cos(math.sqrt(3.0) * t)
    )
    np.testing.assert_allclose(
        damped_mode_solution(1.0, 2.0, 1.0, 2.0, t), np.exp(-t) * (1.0 + 3.0 * t)
    )
    np.testing.assert_allclose(
        damped_mode_solution(1.0, 0.0, 2.0, 3.0, t), 2.0 * np.exp(-t) - np.exp(-2.0 * t)
    )
    assert isinstance(damped_mode_solution(1.0, 0.0, 3.0, 1.0, 0.5), float)


@pytest.mark.integration_test
def test_small_data_is_global(cube, cubic):
    """Small damped data decays and never triggers detection."""
    initial = mode_superposition(cube, [((1, 1, 1), 0.1, 0.0)])
    cfg = StepperConfig(dt=1e-2, t_end=50.0)
    outcome = evolve(initial, cubic, cube, DampingProfile.constant(cube, 1.0), cfg)
    assert outcome.is_global
    assert len(outcome.samples) == 5001
    assert check_energy_monotone_and_bounded(outcome.samples).holds
    assert outcome.samples[-1].energy_space_norm < 1e-6 * outcome.samples[0].energy_space_norm


@pytest.mark.integration_test
def test_negative_energy_blows_up(cube, cubic):
    """Large negative-energy data without damping is detected and confirmed."""
    initial = mode_superposition(cube, [((1, 1, 1), 5.0, 0.0)])
    cfg = StepperConfig(dt=1e-3, t_end=20.0)
    outcome = evolve(initial, cubic, cube, DampingProfile.constant(cube, 0.0), cfg)
    assert outcome.samples[0].E < -100.0
    assert outcome.kind == "blowup"
    assert outcome.t_final < 20.0
    assert outcome.confirmed is True
    assert outcome.final_state.is_finite()


def _largest_mode_deviation(dom: SpectralDomain, dt: float) -> float:
    """Largest gap between the (1, 1, 1) amplitude and its closed form for f = 0, γ = 1."""
    omega = math.sqrt(2.75)
    deviations = []

    def observe(state: WaveState) -> None:
        exact = math.exp(-state.t / 2) * (
            math.cos(omega * state.t) + math.sin(omega * state.t) / (2 * omega)
        )
        deviations.append(abs(state.u_hat[0, 0, 0] - exact))

    initial = mode_superposition(dom, [((1, 1, 1), 1.0, 0.0)])
    cfg = StepperConfig(dt=dt, t_end=5.0)
    evolve(initial, ZERO_MAP, dom, DampingProfile.constant(dom, 1.0), cfg, observer=observe)
    return max(deviations)


def test_linear_damped_mode_converges_at_second_order(cube):
    """The deviation from ``e^{-t/2}(cos ωt + sin ωt/(2ω))`` falls by 4 per halving of dt."""
    errors = [_largest_mode_deviation(cube, _dt) for _dt in (1e-2, 5e-3, 2.5e-3)]
    assert errors[0] < 1e-4
    assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.2)
    assert errors[1] / errors[2] == pytest.approx(4.0, rel=0.2)


def test_resumed_run_continues_checkpoint_numbering(tmp_path, cube, cubic):
    """A resumed run names checkpoints by steps since t = 0 and leaves earlier ones alone."""
    damping = DampingProfile.constant(cube, 0.5)
    cfg = StepperConfig(dt=0.01, t_end=0.3)
    initial = random_state(cube, seed=2, amplitude=0.5)
    first_leg = cfg.model_copy(update={"t_end": 0.1})
    evolve(initial, cubic, cube, damping, first_leg, checkpoint_dir=tmp_path, checkpoint_every=10)
    middle = read_checkpoint(tmp_path / "ckpt_000000010.bin", cube)

    evolve(middle, cubic, cube, damping, cfg, checkpoint_dir=tmp_path, checkpoint_every=10)
    assert sorted(_p.name for _p in tmp_path.iterdir()) == [
        "ckpt_000000010.bin",
        "ckpt_000000020.bin",
        "ckpt_000000030.bin",
    ]
    assert read_checkpoint(tmp_path / "ckpt_000000010.bin", cube).t == pytest.approx(0.1)
    assert read_checkpoint(tmp_path / "ckpt_000000030.bin", cube).t == pytest.approx(0.3)


def test_horizon_off_the_step_grid_warns(cube, cubic, caplog):
    """t_end that is not a whole number of steps is reported with the actual stopping time."""
    initial = mode_superposition(cube, [((1, 1, 1), 0.1, 0.0)])
    damping = DampingProfile.constant(cube, 1.0)
    with caplog.at_level(logging.WARNING, logger="src.dampedwave.integrator"):
        outcome = evolve(initial, cubic, cube, damping, StepperConfig(dt=0.03, t_end=0.1))
    assert outcome.t_final == pytest.approx(0.09)
    assert "not a multiple of dt" in caplog.text

    caplog.clear()
    with caplog.at_level(logging.WARNING, logger="src.dampedwave.integrator"):
        evolve(initial, cubic, cube, damping, StepperConfig(dt=0.01, t_end=0.1))
    assert "not a multiple of dt" not in caplog.text


@pytest.mark.integration_test
def test_undamped_small_data_keeps_nonnegative_energy(cube, cubic):
    """Without damping small data stays global to t = 50 and its energy never dips below zero."""
    initial = mode_superposition(cube, [((1, 1, 1), 0.1, 0.0)])
    cfg = StepperConfig(dt=1e-2, t_end=50.0)
    outcome = evolve(initial, cubic, cube, DampingProfile.constant(cube, 0.0), cfg)
    assert outcome.is_global
    assert outcome.t_final == pytest.approx(50.0)
    assert min(_s.E for _s in outcome.samples) >= -1e-5
