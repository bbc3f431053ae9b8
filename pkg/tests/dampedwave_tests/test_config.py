"""Tests for run and sweep configuration files."""

import pytest

from src.dampedwave.config import (
    RunConfig,
    SweepConfig,
    load_run_config,
    load_sweep_config,
    validate_run_config,
)
from src.dampedwave.errors import ConfigError
from src.dampedwave.runner import PRESETS


RUN_PRESETS = [
    "damped_cubic_small.toml",
    "negative_energy_blowup.toml",
    "linear_verify.toml",
]
SWEEP_PRESETS = ["amplitude_sweep.toml", "gamma_sweep.toml"]


def _run_data(**sections) -> dict:
    data = {
        "name": "test",
        "domain": {"d": 3, "n": 8},
        "nonlinearity": {"terms": [{"lambda": 1.0, "alpha": 3.0}]},
        "damping": {"kind": "constant", "value": 1.0},
        "initial": {"kind": "modes", "modes": [{"k": [1, 1, 1], "u": 0.1}]},
        "stepper": {"dt": 1e-2, "t_end": 1.0},
    }
    data.update(sections)
    return data


@pytest.mark.parametrize("name", RUN_PRESETS)
def test_run_presets_validate(name):
    """Every shipped run preset loads."""
    cfg = load_run_config(PRESETS / name)
    assert isinstance(cfg, RunConfig)
    assert cfg.domain.lambda1 == pytest.approx(3.0)


@pytest.mark.parametrize("name", SWEEP_PRESETS)
def test_sweep_presets_validate(name):
    """Every shipped sweep preset loads and expands."""
    cfg = load_sweep_config(PRESETS / name)
    assert isinstance(cfg, SweepConfig)
    assert len(cfg.expand()) == cfg.size


def test_linear_verify_preset_has_zero_map():
    """An empty term list is the zero map."""
    assert load_run_config(PRESETS / "linear_verify.toml").nonlinearity.is_zero


def test_unknown_key_rejected():
    """A misspelled key is an error, not a silent default."""
    with pytest.raises(ConfigError, match="alhpa"):
        validate_run_config(_run_data(nonlinearity={"terms": [{"lambda": 1.0, "alhpa": 3.0}]}))


@pytest.mark.parametrize(
    "sections, message",
    [
        ({"domain": {"d": 2, "n": 8, "bc": "periodic", "beta": 0.0}}, "Poincaré"),
        ({"domain": {"d": 2, "n": [8, 8, 8]}}, "domain.n"),
        ({"damping": {"kind": "constant", "value": -1.0}}, "damping"),
        ({"damping": {"kind": "indicator", "value": 1.0}}, "lower and upper"),
        ({"nonlinearity": {"terms": [{"lambda": 1.0, "alpha": 1.0}]}}, "epsilon"),
        ({"stepper": {"dt": 0.5, "t_end": 1.0}}, "nonlinear substep"),
        ({"initial": {"kind": "file"}}, "initial.path"),
    ],
)
def test_invariant_violations(sections, message):
    """Each violated invariant is named in the error."""
    with pytest.raises(ConfigError, match=message):
        validate_run_config(_run_data(**sections))


def test_periodic_domain_with_mass_is_valid():
    """β > 0 makes the torus admissible."""
    cfg = validate_run_config(_run_data(domain={"d": 2, "n": 8, "bc": "periodic", "beta": 0.5}))
    assert cfg.domain.build().poincare_check().ok


def test_toml_syntax_error(tmp_path):
    """Broken TOML is a configuration error."""
    path = tmp_path / "broken.toml"
    path.write_text("[domain\nd = 3\n")
    with pytest.raises(ConfigError):
        load_run_config(path)


def test_overrides():
    """Dotted overrides re-validate; unknown paths raise."""
    cfg = validate_run_config(_run_data())
    changed = cfg.with_overrides({"stepper.dt": 5e-3, "initial.modes.0.u": 0.2})
    assert changed.stepper.dt == 5e-3
    assert changed.initial.modes[0].u == 0.2
    assert cfg.stepper.dt == 1e-2
    with pytest.raises(ConfigError):
        cfg.with_overrides({"initial.modes.3.u": 0.2})
    with pytest.raises(ConfigError):
        cfg.with_overrides({"stepper.dt": 1.0})


def test_sweep_expansion():
    """The cross product is enumerated in axis order with stable run ids."""
    cfg = SweepConfig.model_validate(
        {
            "base": _run_data(),
            "axes": [
                {"path": "damping.value", "values": [0.0, 1.0]},
                {"path": "initial.modes.0.u", "values": [0.1, 0.2, 0.3]},
            ],
        }
    )
    runs = cfg.expand()
    assert cfg.size == 6
    assert [_r[0] for _r in runs] == [f"run_{_i:03d}" for _i in range(6)]
    run_id, point, run_cfg = runs[4]
    assert point == {"damping.value": 1.0, "initial.modes.0.u": 0.2}
    assert run_cfg.damping.value == 1.0 and run_cfg.initial.modes[0].u == 0.2
    assert run_cfg.name == "test/run_004"


def test_sweep_cap():
    """Grids above max_runs are refused."""
    with pytest.raises(ValueError, match="max_runs"):
        SweepConfig.model_validate(
            {
                "base": _run_data(),
                "axes": [{"path": "damping.value", "values": [0.0, 0.5, 1.0]}],
                "max_runs": 2,
            }
        )


def test_indicator_damping_builds(cube):
    """An indicator block samples to a non-uniform profile."""
    cfg = validate_run_config(
        _run_data(damping={"kind": "indicator", "value": 2.0, "lower": [0, 0, 0], "upper": [1.5, 3.2, 3.2]})
    )
    profile = cfg.damping.build(cube)
    assert profile.gamma_inf == 2.0 and not profile.is_uniform


def test_random_initial_data_is_seeded(cube):
    """Same seed, same field; the seed override wins."""
    cfg = validate_run_config(_run_data(initial={"kind": "random", "seed": 4, "amplitude": 0.3}))
    first, second = cfg.initial.build(cube), cfg.initial.build(cube)
    assert (first.u == second.u).all()
    assert abs(first.u).max() == pytest.approx(0.3)
    assert not (cfg.initial.build(cube, seed=5).u == first.u).all()


def test_sweep_axis_must_exist():
    """Axis paths are resolved against the base before anything runs."""
    with pytest.raises(ValueError, match="damping.valu"):
        SweepConfig.model_validate(
            {"base": _run_data(), "axes": [{"path": "damping.valu", "values": [0.0]}]}
        )
