"""Initial data ``(u⁰, u¹)``: mode superpositions, seeded random fields, files."""

import logging
from pathlib import Path
from typing import Sequence

import numpy as np

from .checkpoint import read_checkpoint
from .diagnostics import WaveState
from .domain import GridField, SpectralDomain, SpectralField
from .errors import FieldShapeError


logger = logging.getLogger(__name__)


def mode_superposition(
    dom: SpectralDomain,
    modes: "Sequence[tuple[Sequence[int], float, float]]",
) -> WaveState:
    """Build ``u⁰ = Σ aₖ φₖ`` and ``u¹ = Σ bₖ φₖ`` from ``(k, aₖ, bₖ)`` triples.

    Repeated modes add up; an empty list gives the zero state.
    """
    dtype = np.float64 if dom.bc == "dirichlet" else np.complex128
    u_hat: SpectralField = np.zeros(dom.shape, dtype=dtype)
    v_hat = np.zeros_like(u_hat)
    for k, a, b in modes:
        unit = dom.mode_field(k)
        u_hat = u_hat + a * unit
        v_hat = v_hat + b * unit
    return WaveState.from_spectral(0.0, u_hat, v_hat, dom)


def random_field(
    dom: SpectralDomain,
    rng: np.random.Generator,
    amplitude: float = 1.0,
    decay: float = 2.0,
) -> GridField:
    """Gaussian random field with amplitudes ``∝ (1 + μ_k)^{-decay}``.

    The result is rescaled to ``max |u| = amplitude``.
    """
    weights = (1.0 + dom.eigenvalues) ** (-decay)
    if dom.bc == "dirichlet":
        coefficients = rng.standard_normal(dom.shape) * weights
    else:
        coefficients = (
            rng.standard_normal(dom.shape) + 1j * rng.standard_normal(dom.shape)
        ) * weights
    u = dom.to_grid(coefficients)
    peak = float(np.abs(u).max())
    if peak == 0.0:
        return u
    return amplitude * u / peak


def random_state(
    dom: SpectralDomain,
    seed: int,
    amplitude: float,
    decay: float = 2.0,
    velocity_amplitude: float = 0.0,
) -> WaveState:
    """Seeded random ``u⁰`` (and optionally ``u¹``); same seed, same bytes."""
    rng = np.random.default_rng(seed)
    u = random_field(dom, rng, amplitude, decay)
    v = (
        random_field(dom, rng, velocity_amplitude, decay)
        if velocity_amplitude > 0
        else np.zeros(dom.shape)
    )
    return WaveState(t=0.0, u=u, v=v, domain=dom)


def load_state(path: Path, dom: SpectralDomain) -> WaveState:
    """Read a state from a checkpoint or from an ``.npz`` holding ``u`` and ``v``."""
    path = Path(path)
    if path.suffix != ".npz":
        return read_checkpoint(path, dom)

    with np.load(path) as data:
        missing = {"u", "v"} - set(data.files)
        if missing:
            raise FieldShapeError(f"{path} lacks arrays {sorted(missing)}")
        u = np.asarray(data["u"], dtype=np.float64)
        v = np.asarray(data["v"], dtype=np.float64)
        t = float(data["t"]) if "t" in data.files else 0.0
    logger.info("loaded initial data from %s", path)
    return WaveState(t=t, u=u, v=v, domain=dom)
