"""Shared fixtures for simulator tests."""

from dataclasses import fields

import numpy as np
import pytest

from src.dampedwave.diagnostics import DiagnosticsSample
from src.dampedwave.domain import SpectralDomain
from src.dampedwave.nonlinearity import NonlinearitySpec


def samples_from_columns(t: np.ndarray, **columns: np.ndarray) -> list[DiagnosticsSample]:
    """Build a diagnostics series; columns not given are zero."""
    names = [_f.name for _f in fields(DiagnosticsSample) if _f.name != "t"]
    unknown = set(columns) - set(names)
    assert not unknown, f"unknown columns {unknown}"
    data = {name: np.broadcast_to(columns.get(name, 0.0), t.shape) for name in names}
    return [
        DiagnosticsSample(t=float(t[_i]), **{name: float(data[name][_i]) for name in names})
        for _i in range(t.size)
    ]


@pytest.fixture()
def cube() -> SpectralDomain:
    """``[0, π]³`` with 8 sine modes per axis, β = 0."""
    return SpectralDomain(d=3, n=8)


@pytest.fixture()
def cubic() -> NonlinearitySpec:
    """``f(u) = u³``."""
    return NonlinearitySpec.from_pairs([(1.0, 3.0)])


@pytest.fixture()
def fundamental(cube: SpectralDomain) -> np.ndarray:
    """``sin x sin y sin z`` on the grid of ``cube``."""
    x, y, z = cube.grid()
    return np.sin(x) * np.sin(y) * np.sin(z)


@pytest.fixture()
def make_samples():
    """:func:`samples_from_columns` for tests that build synthetic series."""
    return samples_from_columns


TINY_RUN_TOML = """\
name = "tiny"

[domain]
d = 3
n = 4

[[nonlinearity.terms]]
lambda = 1.0
alpha = 3.0

[damping]
kind = "constant"
value = {gamma}

[initial]
kind = "modes"
modes = [{modes}]

[stepper]
dt = {dt}
t_end = {t_end}

[outputs]
directory = "{directory}"
snapshot_every = 5
"""


@pytest.fixture()
def write_run_config(tmp_path):
    """Write a small cubic run config and return its path."""

    def write(
        amplitude: float = 0.1,
        gamma: float = 1.0,
        dt: float = 0.01,
        t_end: float = 0.5,
        empty: bool = False,
    ):
        modes = "" if empty else f"{{ k = [1, 1, 1], u = {amplitude}, v = 0.0 }}"
        path = tmp_path / "run.toml"
        path.write_text(
            TINY_RUN_TOML.format(
                gamma=gamma,
                modes=modes,
                dt=dt,
                t_end=t_end,
                directory=(tmp_path / "from_config").as_posix(),
            )
        )
        return path

    return write


@pytest.fixture(autouse=True)
def _no_output_override(monkeypatch):
    """Keep a developer's ``DAMPEDWAVE_OUT`` out of the tests."""
    monkeypatch.delenv("DAMPEDWAVE_OUT", raising=False)
