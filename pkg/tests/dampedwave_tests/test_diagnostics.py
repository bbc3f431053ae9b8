"""Tests for energy, virial and CSV diagnostics."""

import math

import numpy as np
import pytest

from src.dampedwave.diagnostics import (
    CSV_COLUMNS,
    DampingProfile,
    WaveState,
    dissipation_residual,
    energy,
    finite_difference_virial,
    read_samples_csv,
    sample_spacing,
    virial_sample,
    write_samples_csv,
)
from src.dampedwave.domain import SpectralDomain
from src.dampedwave.errors import FieldShapeError, InsufficientSamplesError
from src.dampedwave.initial_data import mode_superposition
from src.dampedwave.integrator import StepperConfig, evolve
from src.dampedwave.nonlinearity import NonlinearitySpec


ENERGY_OF_FUNDAMENTAL = 357 * math.pi**3 / 2048
MPP_OF_FUNDAMENTAL = -0.64453125 * math.pi**3
REFINEMENT_STEPS = (1e-2, 5e-3, 2.5e-3)


@pytest.fixture()
def fundamental_state(cube: SpectralDomain, fundamental: np.ndarray) -> WaveState:
    """``(sin x sin y sin z, 0)`` at t = 0."""
    return WaveState(t=0.0, u=fundamental, v=np.zeros(cube.shape), domain=cube)


@pytest.mark.parametrize("dealias", [True, False])
def test_energy_of_fundamental(
    fundamental_state: WaveState, cubic: NonlinearitySpec, dealias: bool
):
    """E = 3π³/16 - 27π³/2048 for the cubic; both quadratures are exact here."""
    assert energy(fundamental_state, cubic, dealias=dealias) == pytest.approx(
        ENERGY_OF_FUNDAMENTAL, rel=1e-10
    )


def test_virial_sample_of_fundamental(
    cube: SpectralDomain, fundamental_state: WaveState, cubic: NonlinearitySpec
):
    """Closed-form M, M' and M'' of a state at rest."""
    sample = virial_sample(fundamental_state, cubic, cube, DampingProfile.constant(cube, 1.0))
    assert sample.M == pytest.approx(math.pi**3 / 8)
    assert sample.h1_u == pytest.approx(3 * math.pi**3 / 8)
    assert sample.Mp == pytest.approx(0.0, abs=1e-12)
    assert sample.Mpp == pytest.approx(MPP_OF_FUNDAMENTAL, rel=1e-10)
    assert sample.E == pytest.approx(ENERGY_OF_FUNDAMENTAL, rel=1e-10)
    assert sample.intGvv == 0.0
    assert sample.energy_space_norm == pytest.approx(math.sqrt(3 * math.pi**3 / 8))


def test_zero_state_diagnostics(cube: SpectralDomain, cubic: NonlinearitySpec):
    """The trivial state has every diagnostic equal to zero."""
    sample = virial_sample(WaveState.zeros(cube), cubic, None, DampingProfile.constant(cube, 2.0))
    assert all(getattr(sample, name) == 0.0 for name in CSV_COLUMNS)


def test_state_shape_checked(cube: SpectralDomain):
    """A state refuses fields from another grid."""
    with pytest.raises(FieldShapeError):
        WaveState(t=0.0, u=np.zeros((4, 4, 4)), v=np.zeros(cube.shape), domain=cube)


def test_damping_profile_validation(cube: SpectralDomain):
    """Damping must be finite and nonnegative."""
    with pytest.raises(ValueError):
        DampingProfile.constant(cube, -1.0)
    with pytest.raises(ValueError):
        DampingProfile(gamma=np.full(cube.shape, np.nan))


def test_indicator_damping(cube: SpectralDomain):
    """An indicator profile is non-uniform with the given sup."""
    damping = DampingProfile.indicator(cube, 2.0, [0.0, 0.0, 0.0], [1.5, math.pi, math.pi])
    assert damping.gamma_inf == 2.0
    assert not damping.is_uniform
    assert set(np.unique(damping.gamma)) == {0.0, 2.0}
    assert DampingProfile.constant(cube, 0.5).is_uniform


def test_sample_spacing(make_samples):
    """Uniform spacing is returned; other series raise."""
    t = np.linspace(0.0, 1.0, 11)
    assert sample_spacing(make_samples(t)) == pytest.approx(0.1)
    with pytest.raises(InsufficientSamplesError):
        sample_spacing(make_samples(np.array([0.0])))
    with pytest.raises(InsufficientSamplesError):
        sample_spacing(make_samples(np.array([0.0, 0.1, 0.3])))


def test_finite_difference_virial_of_quadratic(make_samples):
    """``M = t²`` differences to ``M' = 2t`` and ``M'' = 2``."""
    t = np.linspace(0.0, 1.0, 21)
    t_mid, mp, mpp = finite_difference_virial(make_samples(t, M=t**2))
    np.testing.assert_allclose(t_mid, t[1:-1])
    np.testing.assert_allclose(mp, 2 * t[1:-1], atol=1e-12)
    np.testing.assert_allclose(mpp, 2.0, atol=1e-9)


def test_dissipation_residual_exact_balance(make_samples):
    """``E = e^{-t}`` with ``∫γv² = e^{-t}`` balances up to the trapezoid error."""
    t = np.linspace(0.0, 1.0, 1001)
    samples = make_samples(t, E=np.exp(-t), intGvv=np.exp(-t))
    assert dissipation_residual(samples) < 1e-6
    with pytest.raises(InsufficientSamplesError):
        dissipation_residual(samples, dt=0.5)


def test_dissipation_residual_detects_growth(make_samples):
    """Energy growth without dissipation is the residual."""
    t = np.linspace(0.0, 1.0, 11)
    assert dissipation_residual(make_samples(t, E=t)) == pytest.approx(1.0)


def test_csv_round_trip(tmp_path, fundamental_state: WaveState, cubic: NonlinearitySpec):
    """Written series read back identically, columns in the frozen order."""
    dom = fundamental_state.domain
    samples = [
        virial_sample(fundamental_state, cubic, dom, DampingProfile.constant(dom, 1.0))
    ]
    path = tmp_path / "samples.csv"
    write_samples_csv(samples, path)
    assert path.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    assert read_samples_csv(path) == samples


@pytest.fixture(scope="module")
def damped_cubic_runs() -> dict[float, list]:
    """Damped cubic runs to t = 2 sampled every step, one per step size."""
    dom = SpectralDomain(d=3, n=8)
    cubic = NonlinearitySpec.from_pairs([(1.0, 3.0)])
    damping = DampingProfile.constant(dom, 1.0)
    initial = mode_superposition(dom, [((1, 1, 1), 1.0, 0.0), ((1, 2, 1), 0.3, 0.5)])
    runs = {}
    for dt in REFINEMENT_STEPS:
        cfg = StepperConfig(dt=dt, t_end=2.0, confirm_blowup=False)
        outcome = evolve(initial, cubic, dom, damping, cfg)
        assert outcome.is_global
        runs[dt] = outcome.samples
    return runs


def test_virial_formulas_match_differences_of_simulated_m(damped_cubic_runs):
    """Centered differences of sampled M reproduce the M' and M'' formulas at second order."""
    errors = []
    for dt in REFINEMENT_STEPS[:2]:
        samples = damped_cubic_runs[dt]
        _, mp_fd, mpp_fd = finite_difference_virial(samples)
        mp = np.array([_s.Mp for _s in samples])
        mpp = np.array([_s.Mpp for _s in samples])
        assert np.abs(mp_fd - mp[1:-1]).max() <= 1e-3 * np.abs(mp).max()
        errors.append(np.abs(mpp_fd - mpp[1:-1]).max() / np.abs(mpp).max())
    assert errors[0] <= 1e-3
    assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.2)


def test_energy_equality_residual_shrinks_with_dt(damped_cubic_runs):
    """The energy equality defect falls by about 4 per halving of dt."""
    residuals = [
        dissipation_residual(damped_cubic_runs[_dt], dt=_dt) for _dt in REFINEMENT_STEPS
    ]
    assert residuals[0] <= 1e-4
    assert residuals[0] / residuals[1] == pytest.approx(4.0, rel=0.2)
    assert residuals[1] / residuals[2] == pytest.approx(4.0, rel=0.2)
