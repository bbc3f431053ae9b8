"""Spectral discretization of boxes (Dirichlet sine basis) and flat tori.

Coefficient conventions
-----------------------
Dirichlet-sine on ``Π [0, Lⱼ]`` with ``n`` interior collocation points per
axis, ``xⱼ = j Lⱼ/(n+1)``: real amplitudes with
``u(x) = Σ_k c_k Π sin(π kⱼ xⱼ / Lⱼ)``, ``kⱼ ∈ {1..n}``.

Periodic-Fourier on ``Π [0, Lⱼ)`` with ``n`` points per axis: complex
amplitudes with ``u(x) = Σ_k c_k exp(i k·x)`` (``fftn`` ordering).

Both conventions are grid independent, so zero padding is a pure copy of
coefficients into a larger array.
"""

import logging
import math
from functools import cached_property
from typing import Literal

import numpy as np
import numpy.typing as npt
import scipy.fft
from pydantic import BaseModel

from .errors import FieldShapeError


logger = logging.getLogger(__name__)

BoundaryCondition = Literal["dirichlet", "periodic"]
GridField = npt.NDArray[np.float64]
SpectralField = npt.NDArray[np.float64] | npt.NDArray[np.complex128]


class PoincareReport(BaseModel):
    """Sharp discrete Poincaré constant ``λ₁ + β`` and its admissibility."""

    lambda1_plus_beta: float
    ok: bool


def _pad_axis_periodic(c: np.ndarray, axis: int, m: int) -> np.ndarray:
    """Zero-pad one axis of an ``fftn``-ordered array from ``n`` to ``m``."""
    src = np.moveaxis(c, axis, 0)
    n = src.shape[0]
    out = np.zeros((m, *src.shape[1:]), dtype=src.dtype)
    half = n // 2
    if n % 2:
        out[: half + 1] = src[: half + 1]
        out[m - half :] = src[half + 1 :]
    else:
        out[:half] = src[:half]
        out[m - half + 1 :] = src[half + 1 :]
        # Nyquist mode is split between ±n/2 so the padded field stays real.
        out[half] = 0.5 * src[half]
        out[m - half] += 0.5 * src[half]
    return np.moveaxis(out, 0, axis)


def _truncate_axis_periodic(c: np.ndarray, axis: int, n: int) -> np.ndarray:
    """Project one axis of an ``fftn``-ordered array from ``m`` down to ``n``."""
    src = np.moveaxis(c, axis, 0)
    m = src.shape[0]
    out = np.zeros((n, *src.shape[1:]), dtype=src.dtype)
    half = n // 2
    if n % 2:
        out[: half + 1] = src[: half + 1]
        out[half + 1 :] = src[m - half :]
    else:
        out[:half] = src[:half]
        out[half + 1 :] = src[m - half + 1 :]
        out[half] = src[half] + src[m - half]
    return np.moveaxis(out, 0, axis)


class SpectralDomain:
    """Tensor-product box or torus with an exactly diagonal Laplacian.

    Instances are immutable after construction; transforms are pure and may
    run concurrently on distinct fields.

    Parameters
    ----------
    d : int
        Dimension, 1 to 3.
    n : int or sequence of int
        Modes (and collocation points) per axis.
    lengths : sequence of float or None
        Box lengths; ``π`` per axis by default.
    bc : {"dirichlet", "periodic"}
        Sine basis with homogeneous Dirichlet data, or Fourier basis.
    beta : float
        Mass parameter β of ``□u + γ∂ₜu + βu = f(u)``.
    workers : int or None
        Threads handed to ``scipy.fft``.
    """

    def __init__(
        self,
        d: int,
        n: "int | tuple[int, ...] | list[int]",
        lengths: "tuple[float, ...] | list[float] | None" = None,
        bc: BoundaryCondition = "dirichlet",
        beta: float = 0.0,
        workers: int | None = None,
    ) -> None:
        """Validate geometry and resolution."""
        if d not in (1, 2, 3):
            raise ValueError(f"d must be 1, 2 or 3, got {d}")
        n_tuple = (n,) * d if isinstance(n, int) else tuple(int(_n) for _n in n)
        lengths_tuple = (
            (math.pi,) * d if lengths is None else tuple(float(_l) for _l in lengths)
        )
        if len(n_tuple) != d or len(lengths_tuple) != d:
            raise ValueError(f"expected {d} entries for n and lengths")
        if any(_n < 1 for _n in n_tuple):
            raise ValueError(f"mode counts must be positive, got {n_tuple}")
        if any(_l <= 0 for _l in lengths_tuple):
            raise ValueError(f"lengths must be positive, got {lengths_tuple}")
        if bc not in ("dirichlet", "periodic"):
            raise ValueError(f"unknown boundary condition {bc!r}")

        self.d = d
        self.n = n_tuple
        self.lengths = lengths_tuple
        self.bc: BoundaryCondition = bc
        self.beta = float(beta)
        self.workers = workers
        self._padded: dict[float, "SpectralDomain"] = {}

    def __repr__(self) -> str:
        """Short description for logs."""
        return (
            f"SpectralDomain(d={self.d}, n={self.n}, lengths={self.lengths}, "
            f"bc={self.bc!r}, beta={self.beta})"
        )

    @property
    def shape(self) -> tuple[int, ...]:
        """Shape of grid and spectral arrays."""
        return self.n

    @property
    def volume(self) -> float:
        """``|Ω|``."""
        return float(np.prod(self.lengths))

    @property
    def cell_volume(self) -> float:
        """Trapezoid weight of one collocation point."""
        if self.bc == "dirichlet":
            return float(np.prod([_l / (_n + 1) for _l, _n in zip(self.lengths, self.n)]))
        return self.volume / float(np.prod(self.n))

    @property
    def mode_weight(self) -> float:
        """Parseval weight: ``∫u² = mode_weight · Σ|c_k|²``."""
        if self.bc == "dirichlet":
            return float(np.prod([_l / 2.0 for _l in self.lengths]))
        return self.volume

    def axes(self) -> list[npt.NDArray[np.float64]]:
        """Collocation coordinates per axis."""
        if self.bc == "dirichlet":
            return [
                np.arange(1, _n + 1) * _l / (_n + 1)
                for _n, _l in zip(self.n, self.lengths)
            ]
        return [np.arange(_n) * _l / _n for _n, _l in zip(self.n, self.lengths)]

    def grid(self) -> list[npt.NDArray[np.float64]]:
        """Collocation coordinates as ``ij``-indexed mesh arrays."""
        return np.meshgrid(*self.axes(), indexing="ij")

    def wavenumbers(self) -> list[npt.NDArray[np.float64]]:
        """Physical wavenumbers per axis (``π k/L`` or ``2π k/L``)."""
        if self.bc == "dirichlet":
            return [
                math.pi * np.arange(1, _n + 1) / _l
                for _n, _l in zip(self.n, self.lengths)
            ]
        return [
            2.0 * math.pi * scipy.fft.fftfreq(_n, d=1.0 / _n) / _l
            for _n, _l in zip(self.n, self.lengths)
        ]

    @cached_property
    def eigenvalues(self) -> npt.NDArray[np.float64]:
        """``μ_k``: the Laplacian acts on mode ``k`` as ``-μ_k``."""
        mu = np.zeros(self.shape)
        for axis, _k in enumerate(self.wavenumbers()):
            shape = [1] * self.d
            shape[axis] = -1
            mu = mu + (_k**2).reshape(shape)
        return mu

    @property
    def lambda1(self) -> float:
        """Smallest Laplacian eigenvalue of the basis (0 on the torus)."""
        if self.bc == "dirichlet":
            return float(sum((math.pi / _l) ** 2 for _l in self.lengths))
        return 0.0

    def poincare_check(self) -> PoincareReport:
        """Check ``λ₁ + β > 0``, the discrete form of the Poincaré inequality."""
        constant = self.lambda1 + self.beta
        return PoincareReport(lambda1_plus_beta=constant, ok=constant > 0)

    def rayleigh_quotients(self) -> npt.NDArray[np.float64]:
        """``h1_norm_sq / l2_norm_sq`` of every basis mode: ``μ_k + β``."""
        return self.eigenvalues + self.beta

    def _check(self, field: np.ndarray, what: str) -> None:
        if field.shape != self.shape:
            raise FieldShapeError(
                f"{what} has shape {field.shape}, domain expects {self.shape}"
            )

    def to_spectral(self, g: GridField) -> SpectralField:
        """Grid values to basis amplitudes."""
        self._check(g, "grid field")
        if self.bc == "dirichlet":
            scale = float(np.prod([_n + 1 for _n in self.n]))
            return scipy.fft.dstn(g, type=1, workers=self.workers) / scale
        return scipy.fft.fftn(g, workers=self.workers) / float(np.prod(self.n))

    def to_grid(self, c: SpectralField) -> GridField:
        """Basis amplitudes to grid values."""
        self._check(c, "spectral field")
        if self.bc == "dirichlet":
            return scipy.fft.dstn(c, type=1, workers=self.workers) / 2.0**self.d
        return np.real(scipy.fft.ifftn(c, workers=self.workers)) * float(
            np.prod(self.n)
        )

    def laplacian_apply(self, c: SpectralField) -> SpectralField:
        """Apply the Laplacian to a spectral field: multiply by ``-μ_k``."""
        self._check(c, "spectral field")
        return -self.eigenvalues * c

    def mode_field(self, k: "tuple[int, ...] | list[int]") -> SpectralField:
        """Spectral field with a unit amplitude on mode ``k``.

        Sine modes are 1-based (``k = (1, 1, 1)`` is the fundamental); Fourier
        modes are signed integers, the cosine pair ``±k`` gets ½ each.
        """
        k = tuple(int(_k) for _k in k)
        if len(k) != self.d:
            raise FieldShapeError(f"mode {k} has {len(k)} entries, expected {self.d}")
        if self.bc == "dirichlet":
            if any(not 1 <= _k <= _n for _k, _n in zip(k, self.n)):
                raise FieldShapeError(f"mode {k} outside 1..{self.n}")
            c = np.zeros(self.shape)
            c[tuple(_k - 1 for _k in k)] = 1.0
            return c

        if any(abs(_k) > (_n - 1) // 2 for _k, _n in zip(k, self.n)):
            raise FieldShapeError(f"mode {k} not resolved by n={self.n}")
        c = np.zeros(self.shape, dtype=np.complex128)
        plus = tuple(_k % _n for _k, _n in zip(k, self.n))
        minus = tuple(-_k % _n for _k, _n in zip(k, self.n))
        c[plus] += 0.5
        c[minus] += 0.5
        return c

    def inner_product(self, a: GridField, b: GridField) -> float:
        """``∫ a b dx`` by trapezoid quadrature (exact for band-limited products)."""
        self._check(a, "first field")
        self._check(b, "second field")
        return self.cell_volume * float(np.sum(a * b))

    def l2_norm_sq(self, u: GridField) -> float:
        """``‖u‖²_{L²}``."""
        return self.inner_product(u, u)

    def h1_norm_sq(self, u: GridField) -> float:
        """``‖u‖²_{H₀¹} = ∫|∇u|² + β|u|²``, computed spectrally."""
        return self.spectral_h1_norm_sq(self.to_spectral(u))

    def spectral_l2_norm_sq(self, c: SpectralField) -> float:
        """Parseval form of ``l2_norm_sq``."""
        self._check(c, "spectral field")
        return self.mode_weight * float(np.sum(np.abs(c) ** 2))

    def spectral_h1_norm_sq(self, c: SpectralField) -> float:
        """``mode_weight · Σ (μ_k + β)|c_k|²``."""
        self._check(c, "spectral field")
        return self.mode_weight * float(
            np.sum((self.eigenvalues + self.beta) * np.abs(c) ** 2)
        )

    def padded(self, factor: float = 1.5) -> "SpectralDomain":
        """Zero-padded quadrature domain with ``ceil(factor · n)`` modes per axis."""
        if factor < 1.0:
            raise ValueError(f"padding factor must be at least 1, got {factor}")
        if factor not in self._padded:
            self._padded[factor] = SpectralDomain(
                d=self.d,
                n=tuple(math.ceil(factor * _n) for _n in self.n),
                lengths=self.lengths,
                bc=self.bc,
                beta=self.beta,
                workers=self.workers,
            )
        return self._padded[factor]

    def pad(self, c: SpectralField, target: "SpectralDomain") -> SpectralField:
        """Copy amplitudes of ``c`` into the (larger) ``target`` layout."""
        self._check(c, "spectral field")
        if self.bc == "dirichlet":
            out = np.zeros(target.shape, dtype=c.dtype)
            out[tuple(slice(0, _n) for _n in self.n)] = c
            return out
        out = c
        for axis, _m in enumerate(target.shape):
            out = _pad_axis_periodic(out, axis, _m)
        return out

    def truncate(self, c: SpectralField, source: "SpectralDomain") -> SpectralField:
        """Project amplitudes living on ``source`` onto this domain's modes."""
        source._check(c, "spectral field")
        if self.bc == "dirichlet":
            return np.ascontiguousarray(c[tuple(slice(0, _n) for _n in self.n)])
        out = c
        for axis, _n in enumerate(self.n):
            out = _truncate_axis_periodic(out, axis, _n)
        return out
