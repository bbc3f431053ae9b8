"""Executable forms of the two ODE lemmas behind the blow-up and decay arguments.

- Explosion lemma: if ``M ≥ 0`` and ``(M')² ≤ δMM''`` with ``0 < δ < 1`` on
  ``[0, ∞)``, then ``M`` is non-increasing.
- Exponential lemma: if ``M₀'' ≥ CM₀`` with ``C > 0``, then either ``M₀``
  diverges or ``M₀(t) ≤ M₀(0)e^{-√C t}``.

Both are checked on finite windows, so each checker only asserts what the
lemma's argument forces inside the window and reports the rest as
inconclusive. The catalog below manufactures trajectories with exact
derivatives from closed-form atoms.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel

from .errors import InsufficientSamplesError
from .verifier import EstimateVerdict


logger = logging.getLogger(__name__)

EXACT_RTOL = 1e-10
DEFAULT_CATALOG_SIZE = 200
GRID_POINTS = 401

Array = npt.NDArray[np.float64]
Atom = Callable[[Array], tuple[Array, Array, Array]]


@dataclass(frozen=True, eq=False)
class OdeTrajectory:
    """``M`` on a uniform grid, with exact derivatives when known.

    Without ``mp``/``mpp`` the derivatives come from second-order differences
    and comparisons get an ``O(h²)`` tolerance with constant 10.
    """

    name: str
    t: Array
    m: Array
    mp: Array | None = None
    mpp: Array | None = None

    def __post_init__(self) -> None:
        """Check grid uniformity and finiteness."""
        if self.t.ndim != 1 or self.t.size < 3 or self.m.shape != self.t.shape:
            raise InsufficientSamplesError(
                f"{self.name}: need matching 1-d t and m with at least 3 points"
            )
        steps = np.diff(self.t)
        if (steps <= 0).any() or np.ptp(steps) > 1e-9 * steps.mean():
            raise InsufficientSamplesError(f"{self.name}: time grid is not uniform")
        if not np.isfinite(self.m).all():
            raise InsufficientSamplesError(f"{self.name}: M is not finite")

    @property
    def spacing(self) -> float:
        """Grid step ``h``."""
        return float(self.t[1] - self.t[0])

    @property
    def exact(self) -> bool:
        """True when both derivatives were supplied."""
        return self.mp is not None and self.mpp is not None

    def derivatives(self) -> tuple[Array, Array]:
        """``(M', M'')``, exact or by ``numpy.gradient`` with second-order edges."""
        if self.mp is not None and self.mpp is not None:
            return self.mp, self.mpp
        mp = np.gradient(self.m, self.spacing, edge_order=2)
        return mp, np.gradient(mp, self.spacing, edge_order=2)

    def tolerance(self, scale: float) -> float:
        """Absolute tolerance for a comparison of magnitude ``scale``."""
        if self.exact:
            return EXACT_RTOL * scale
        return 10.0 * self.spacing**2 * max(scale, 1.0)


def _hypothesis_not_satisfied(name: str, why: str) -> EstimateVerdict:
    return EstimateVerdict(
        name=name,
        holds=True,
        margin=0.0,
        details=f"hypothesis not satisfied: {why}",
        hypothesis_satisfied=False,
    )


def lemma_explosion_check(traj: OdeTrajectory, delta: float) -> EstimateVerdict:
    """Check the explosion lemma on ``traj`` with constant ``delta``.

    Where ``M'(T₀) > 0``, the lemma's argument shows ``M`` cannot stay finite
    past ``T₀ + δM(T₀)/((1-δ)M'(T₀))``. A conclusion failure is reported only
    at points whose horizon lies inside the window; other increasing points
    are inconclusive, since the trajectory may still explode beyond it.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    name = "lemma_explosion"
    mp, mpp = traj.derivatives()
    if (traj.m < -traj.tolerance(float(np.abs(traj.m).max()))).any():
        return _hypothesis_not_satisfied(name, "M takes negative values")

    lhs = mp**2
    rhs = delta * traj.m * mpp
    if traj.exact:
        slack = EXACT_RTOL * np.maximum(np.abs(lhs), np.abs(rhs))
    else:
        slack = np.full_like(lhs, traj.tolerance(float(max(lhs.max(), np.abs(rhs).max()))))
    if (lhs - rhs > slack + 1e-300).any():
        worst = float(traj.t[np.argmax(lhs - rhs - slack)])
        return _hypothesis_not_satisfied(name, f"(M')² > δMM'' at t = {worst:.6g}")

    tol = traj.tolerance(float(max(np.abs(mp).max(), 1e-300)))
    increasing = mp > tol
    with np.errstate(divide="ignore", invalid="ignore"):
        horizon = traj.t + delta * traj.m / ((1.0 - delta) * mp)
    forced = increasing & (horizon <= traj.t[-1])
    inconclusive = int(np.count_nonzero(increasing & ~forced))

    margin = float(np.min(tol - mp[forced])) if forced.any() else 0.0
    holds = not forced.any()
    if holds and inconclusive == 0:
        drift = float(np.max(traj.m - traj.m[0]))
        margin = min(margin, traj.tolerance(float(np.abs(traj.m).max())) - drift)
        holds = margin >= 0.0

    return EstimateVerdict(
        name=name,
        holds=holds,
        margin=margin,
        details=(
            f"M non-increasing where forced; {inconclusive} increasing points "
            "with explosion horizon beyond the window"
            if inconclusive
            else "M non-increasing"
        ),
        fitted_constants={"delta": delta, "inconclusive_points": float(inconclusive)},
    )


def lemma_exponential_check(traj: OdeTrajectory, C: float) -> EstimateVerdict:
    """Check the exponential lemma on ``traj`` with constant ``C``.

    ``N = M₀' + √C M₀`` satisfies ``N' ≥ √C N``: one point with ``N > 0``
    certifies the diverging branch. A trajectory that also exceeds
    ``2·max(|M₀(0)|, 1)`` and increases at the end is tagged diverging too.
    Otherwise ``M₀(t) ≤ M₀(0)e^{-√C t}`` is asserted.
    """
    if C <= 0.0:
        raise ValueError(f"C must be positive, got {C}")
    name = "lemma_exponential"
    mp, mpp = traj.derivatives()
    m = traj.m

    deficit = C * m - mpp
    if traj.exact:
        slack = EXACT_RTOL * np.maximum(np.abs(mpp), np.abs(C * m))
    else:
        slack = np.full_like(m, traj.tolerance(float(np.abs(mpp).max())))
    if (deficit > slack + 1e-300).any():
        worst = float(traj.t[np.argmax(deficit - slack)])
        return _hypothesis_not_satisfied(name, f"M'' < CM at t = {worst:.6g}")

    root_c = math.sqrt(C)
    certificate = mp + root_c * m
    if traj.exact:
        cert_slack = EXACT_RTOL * (np.abs(mp) + root_c * np.abs(m))
    else:
        cert_slack = np.full_like(m, traj.tolerance(float(np.abs(certificate).max())))
    certified = bool((certificate > cert_slack + 1e-300).any())
    grown = bool(m.max() > 2.0 * max(abs(m[0]), 1.0) and mp[-1] > 0)
    if certified or grown:
        return EstimateVerdict(
            name=name,
            holds=True,
            margin=0.0,
            details="diverging branch",
            fitted_constants={"C": C, "certified": float(certified)},
        )

    envelope = m[0] * np.exp(-root_c * traj.t)
    tol = traj.tolerance(float(max(np.abs(m).max(), 1e-300)))
    margin = float(np.min(envelope + tol - m))
    if float(np.max(np.abs(m - envelope))) <= tol:
        details = "equality branch: M = M(0)·e^(-√C t)"
    else:
        details = "decaying branch: M ≤ M(0)·e^(-√C t)"
    return EstimateVerdict(
        name=name,
        holds=margin >= 0.0,
        margin=margin,
        details=details,
        fitted_constants={"C": C, "certified": 0.0},
    )


def constant(b: float) -> Atom:
    """``b``."""
    return lambda t: (np.full_like(t, b), np.zeros_like(t), np.zeros_like(t))


def inverse_power(b: float, q: float, shift: float = 1.0) -> Atom:
    """``b(shift + t)^{-q}``."""

    def atom(t: Array) -> tuple[Array, Array, Array]:
        base = shift + t
        return (
            b * base**-q,
            -q * b * base ** (-q - 1.0),
            q * (q + 1.0) * b * base ** (-q - 2.0),
        )

    return atom


def blowup_profile(b: float, q: float, t_star: float) -> Atom:
    """``b(T* - t)^{-q}``, finite on windows ending before ``T*``."""

    def atom(t: Array) -> tuple[Array, Array, Array]:
        base = t_star - t
        return (
            b * base**-q,
            q * b * base ** (-q - 1.0),
            q * (q + 1.0) * b * base ** (-q - 2.0),
        )

    return atom


def exponential(b: float, r: float) -> Atom:
    """``b·e^{rt}``."""

    def atom(t: Array) -> tuple[Array, Array, Array]:
        value = b * np.exp(r * t)
        return value, r * value, r * r * value

    return atom


def hyperbolic_cosine(b: float, r: float) -> Atom:
    """``b·cosh(rt)``."""

    def atom(t: Array) -> tuple[Array, Array, Array]:
        return b * np.cosh(r * t), b * r * np.sinh(r * t), b * r * r * np.cosh(r * t)

    return atom


def compose(name: str, t_end: float, *atoms: Atom, points: int = GRID_POINTS) -> OdeTrajectory:
    """Sum of atoms sampled on ``[0, t_end]`` with exact derivatives."""
    t = np.linspace(0.0, t_end, points)
    m, mp, mpp = np.zeros_like(t), np.zeros_like(t), np.zeros_like(t)
    for atom in atoms:
        value, first, second = atom(t)
        m, mp, mpp = m + value, mp + first, mpp + second
    return OdeTrajectory(name=name, t=t, m=m, mp=mp, mpp=mpp)


class LemmaCase(BaseModel):
    """One catalog entry and its verdict."""

    name: str
    lemma: Literal["explosion", "exponential"]
    parameter: float
    verdict: EstimateVerdict


class LemmaReport(BaseModel):
    """Catalog run summary; serializes to identical bytes for a fixed seed."""

    seed: int
    n_cases: int
    n_hypothesis_satisfied: int
    n_hypothesis_not_satisfied: int
    n_conclusion_failures: int
    cases: list[LemmaCase]

    @property
    def passed(self) -> bool:
        """True when no hypothesis-satisfying case failed its conclusion."""
        return self.n_conclusion_failures == 0


def _boundary_cases() -> list[tuple[str, str, float, OdeTrajectory]]:
    """Fixed cases covering constants, equality boundaries and both branches."""
    root_c = 1.5
    cases: list[tuple[str, str, float, OdeTrajectory]] = [
        ("explosion", "constant", 0.5, compose("constant", 10.0, constant(3.0))),
        ("explosion", "exp_growth", 0.9, compose("exp_growth", 5.0, exponential(1.0, 1.0))),
        (
            "explosion",
            "power_q1000_delta0999",
            0.999,
            compose("power_q1000", 1.0, inverse_power(1.0, 1000.0)),
        ),
        (
            "exponential",
            "exp_decay_equality",
            root_c**2,
            compose("exp_decay", 5.0, exponential(1.0, -root_c)),
        ),
        (
            "exponential",
            "cosh",
            root_c**2,
            compose("cosh", 5.0, hyperbolic_cosine(1.0, root_c)),
        ),
        (
            "exponential",
            "two_exp_equality",
            root_c**2,
            compose(
                "two_exp", 5.0, exponential(2.0, root_c), exponential(-1.0, -root_c)
            ),
        ),
        (
            "exponential",
            "negative_growth",
            root_c**2,
            compose("negative_growth", 3.0, exponential(-1.0, root_c)),
        ),
        (
            "exponential",
            "power_fails",
            1.0,
            compose("power", 10.0, inverse_power(1.0, 1.0)),
        ),
    ]
    for q in (0.5, 1.0, 2.0, 5.0):
        delta = q / (q + 1.0)
        cases.append(
            (
                "explosion",
                f"power_q{q:g}_boundary",
                delta,
                compose(f"power_q{q:g}", 20.0, inverse_power(1.0, q)),
            )
        )
        cases.append(
            (
                "explosion",
                f"blowup_profile_q{q:g}",
                delta,
                compose(f"blowup_q{q:g}", 0.9, blowup_profile(1.0, q, 1.0)),
            )
        )
    return cases


def _random_case(
    rng: np.random.Generator, index: int
) -> tuple[str, str, float, OdeTrajectory]:
    """Seeded mixture; roughly half are built to satisfy their hypothesis."""
    t_end = float(rng.uniform(1.0, 20.0))
    family = int(rng.integers(6))
    name = f"mix_{index:04d}"

    if family == 0:
        qs = rng.uniform(0.2, 6.0, size=int(rng.integers(1, 4)))
        atoms = [inverse_power(float(rng.uniform(0.1, 2.0)), float(_q)) for _q in qs]
        delta = float(np.clip(max(qs / (qs + 1.0)) + rng.uniform(0.0, 0.05), 0.01, 0.999))
        return "explosion", name, delta, compose(name, t_end, constant(float(rng.uniform(0, 2))), *atoms)
    if family == 1:
        a, b, r = rng.uniform(0.1, 2.0, size=3)
        delta = float(np.clip(b / (a + b) + rng.uniform(-0.2, 0.2), 0.01, 0.99))
        return "explosion", name, delta, compose(name, t_end, constant(float(a)), exponential(float(b), -float(r)))
    if family == 2:
        q = float(rng.uniform(0.2, 5.0))
        t_star = float(rng.uniform(1.0, 5.0))
        delta = float(np.clip(q / (q + 1.0) + rng.uniform(0.0, 0.05), 0.01, 0.999))
        trajectory = compose(name, 0.95 * t_star, blowup_profile(float(rng.uniform(0.1, 2.0)), q, t_star))
        return "explosion", name, delta, trajectory

    root_c = float(rng.uniform(0.2, 3.0))
    if family == 3:
        rates = root_c * rng.uniform(1.0, 3.0, size=int(rng.integers(1, 4)))
        atoms = [exponential(float(rng.uniform(0.1, 2.0)), -float(_r)) for _r in rates]
    elif family == 4:
        atoms = [
            hyperbolic_cosine(float(rng.uniform(0.1, 2.0)), root_c * float(rng.uniform(1.0, 2.0))),
            exponential(float(rng.uniform(-1.0, 1.0)), -root_c * float(rng.uniform(1.0, 2.0))),
        ]
    else:
        atoms = [
            exponential(float(rng.uniform(-2.0, 2.0)), root_c * float(rng.uniform(0.5, 2.0))),
            inverse_power(float(rng.uniform(0.1, 2.0)), float(rng.uniform(0.5, 3.0))),
        ]
    return "exponential", name, root_c**2, compose(name, min(t_end, 10.0), *atoms)


def run_lemma_catalog(count: int = DEFAULT_CATALOG_SIZE, seed: int = 0) -> LemmaReport:
    """Build the catalog (fixed cases plus seeded mixtures) and check every entry."""
    entries = _boundary_cases()
    rng = np.random.default_rng(seed)
    while len(entries) < count:
        entries.append(_random_case(rng, len(entries)))

    cases: list[LemmaCase] = []
    for lemma, name, parameter, trajectory in entries:
        with np.errstate(over="ignore", under="ignore"):
            verdict = (
                lemma_explosion_check(trajectory, parameter)
                if lemma == "explosion"
                else lemma_exponential_check(trajectory, parameter)
            )
        if not verdict.holds:
            logger.warning("%s lemma fails on %s: %s", lemma, name, verdict.details)
        cases.append(LemmaCase(name=name, lemma=lemma, parameter=parameter, verdict=verdict))

    satisfied = sum(_c.verdict.hypothesis_satisfied for _c in cases)
    return LemmaReport(
        seed=seed,
        n_cases=len(cases),
        n_hypothesis_satisfied=satisfied,
        n_hypothesis_not_satisfied=len(cases) - satisfied,
        n_conclusion_failures=sum(not _c.verdict.holds for _c in cases),
        cases=cases,
    )
