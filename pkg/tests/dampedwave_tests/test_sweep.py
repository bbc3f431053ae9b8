"""Tests for parallel sweeps and the family roll-up they write."""

import json

import pytest

from src.dampedwave.cli import main
from src.dampedwave.config import SweepConfig, load_run_config
from src.dampedwave.runner import EXIT_ERROR, EXIT_GLOBAL
from src.dampedwave.sweep import run_sweep


SWEEP_TOML = """\
[base]
name = "modes"

[base.domain]
d = 3
n = 4

[[base.nonlinearity.terms]]
lambda = 1.0
alpha = 3.0

[base.damping]
value = 1.0

[base.initial]
modes = [{{ k = [1, 1, 1], u = 0.1 }}]

[base.stepper]
dt = 0.01
t_end = 0.05

[[axes]]
path = "initial.modes.0.k"
values = {values}
"""


@pytest.fixture()
def base(write_run_config) -> dict:
    """Base run as a mapping, short enough for a unit test."""
    cfg = load_run_config(write_run_config(t_end=0.1))
    return cfg.model_dump(mode="json", by_alias=True)


def test_gamma_sweep(base, tmp_path):
    """Every point runs; I₀ is exactly zero without damping."""
    cfg = SweepConfig.model_validate(
        {
            "base": base,
            "axes": [{"path": "damping.value", "values": [0.0, 1.0]}],
            "parallelism": 2,
        }
    )
    summary = run_sweep(cfg, tmp_path)

    assert summary.all_completed
    assert [_r.run_id for _r in summary.runs] == ["run_000", "run_001"]
    assert [_r.point for _r in summary.runs] == [
        {"damping.value": 0.0},
        {"damping.value": 1.0},
    ]
    assert summary.family.n_runs == 2 and summary.family.n_global == 2
    assert summary.family.i0["run_000"] == 0.0
    assert summary.family.i0["run_001"] > 0.0
    for run_id in ("run_000", "run_001"):
        assert (tmp_path / run_id / "summary.json").exists()
        assert (tmp_path / run_id / "samples.csv").exists()

    written = json.loads((tmp_path / "family.json").read_text())
    assert written["format_version"] == "1"
    assert written["family"]["i0"]["run_000"] == 0.0


def test_failed_point_is_recorded(base, tmp_path):
    """A point that cannot run is marked failed while the rest complete."""
    cfg = SweepConfig.model_validate(
        {
            "base": base,
            "axes": [{"path": "initial.modes.0.k", "values": [[1, 1, 1], [9, 9, 9]]}],
        }
    )
    summary = run_sweep(cfg, tmp_path)
    assert [_r.status for _r in summary.runs] == ["completed", "failed"]
    assert "outside" in summary.runs[1].error
    assert not summary.all_completed
    assert summary.family.n_runs == 1


@pytest.mark.parametrize(
    "values, code",
    [("[[1, 1, 1], [1, 2, 1]]", EXIT_GLOBAL), ("[[1, 1, 1], [9, 9, 9]]", EXIT_ERROR)],
)
def test_sweep_command_exit_codes(tmp_path, values, code):
    """The sweep command exits with 1 when any point failed."""
    path = tmp_path / "sweep.toml"
    path.write_text(SWEEP_TOML.format(values=values))
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(path), "--out", str(out)]) == code
    assert (out / "family.json").exists()
