"""Power-sum focusing nonlinearity and its hypothesis constants.

The family is ``f(s) = Σ λᵢ s|s|^{αᵢ-1}`` with ``λᵢ > 0``. Its antiderivative
``F(s) = Σ λᵢ |s|^{αᵢ+1} / (αᵢ+1)`` is even and nonnegative, and the
Ambrosetti-Rabinowitz type condition ``s f(s) ≥ (2+ε) F(s)`` holds termwise
with ``ε = α₁ - 1``.
"""

from typing import overload

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator


class PowerTerm(BaseModel):
    """One term ``λ s|s|^{α-1}`` of the nonlinearity."""

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    lam: float = Field(alias="lambda", gt=0.0)
    alpha: float = Field(ge=1.0)


class NonlinearitySpec(BaseModel):
    """Ordered power-sum nonlinearity.

    An empty term list is the zero map; ``p``, ``p0`` and ``epsilon`` are then
    undefined and reported as ``None``.

    Attributes
    ----------
    terms : list[PowerTerm]
        Sorted by ``alpha`` ascending on validation.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    terms: list[PowerTerm] = Field(default_factory=list)

    @field_validator("terms")
    @classmethod
    def _sorted_and_superlinear(cls, terms: list[PowerTerm]) -> list[PowerTerm]:
        ordered = sorted(terms, key=lambda _term: _term.alpha)
        if ordered and ordered[0].alpha <= 1.0:
            raise ValueError(
                "superlinearity needs epsilon = alpha_1 - 1 > 0; "
                f"smallest exponent is {ordered[0].alpha}"
            )
        return ordered

    @classmethod
    def from_pairs(cls, pairs: "list[tuple[float, float]]") -> "NonlinearitySpec":
        """Build from ``[(lambda, alpha), ...]``."""
        return cls(terms=[PowerTerm(lam=lam, alpha=alpha) for lam, alpha in pairs])

    @property
    def is_zero(self) -> bool:
        """True for the zero map."""
        return not self.terms

    @property
    def p(self) -> float | None:
        """Largest exponent (growth exponent of the Lipschitz hypothesis)."""
        return self.terms[-1].alpha if self.terms else None

    @property
    def p0(self) -> float | None:
        """Smallest exponent (coercivity exponent of hypothesis 3)."""
        return self.terms[0].alpha if self.terms else None

    @property
    def epsilon(self) -> float | None:
        """Slack of ``s f(s) ≥ (2+ε) F(s)``, fixed at ``α₁ - 1``."""
        return self.terms[0].alpha - 1.0 if self.terms else None

    @property
    def lipschitz_constant(self) -> float:
        """``C = f'(1) = Σ λᵢ αᵢ`` in ``|f(a)-f(b)| ≤ C|a-b|(1+|a|^{p-1}+|b|^{p-1})``."""
        return f_prime_eval(self, 1.0)


@overload
def f_eval(spec: NonlinearitySpec, s: float) -> float: ...
@overload
def f_eval(
    spec: NonlinearitySpec, s: npt.NDArray[np.float64]
) -> npt.NDArray[np.float64]: ...
def f_eval(spec, s):
    """Evaluate ``f(s) = Σ λᵢ s|s|^{αᵢ-1}`` (odd, ``f(0) = 0``)."""
    s_arr = np.asarray(s, dtype=np.float64)
    out = np.zeros_like(s_arr)
    abs_s = np.abs(s_arr)
    for _term in spec.terms:
        out += _term.lam * s_arr * abs_s ** (_term.alpha - 1.0)
    return out if out.ndim else float(out)


@overload
def F_eval(spec: NonlinearitySpec, s: float) -> float: ...
@overload
def F_eval(
    spec: NonlinearitySpec, s: npt.NDArray[np.float64]
) -> npt.NDArray[np.float64]: ...
def F_eval(spec, s):
    """Evaluate ``F(s) = ∫₀ˢ f = Σ λᵢ |s|^{αᵢ+1}/(αᵢ+1)`` (even, ``F ≥ 0``)."""
    abs_s = np.abs(np.asarray(s, dtype=np.float64))
    out = np.zeros_like(abs_s)
    for _term in spec.terms:
        out += _term.lam * abs_s ** (_term.alpha + 1.0) / (_term.alpha + 1.0)
    return out if out.ndim else float(out)


@overload
def f_prime_eval(spec: NonlinearitySpec, s: float) -> float: ...
@overload
def f_prime_eval(
    spec: NonlinearitySpec, s: npt.NDArray[np.float64]
) -> npt.NDArray[np.float64]: ...
def f_prime_eval(spec, s):
    """Evaluate ``f'(s) = Σ λᵢ αᵢ |s|^{αᵢ-1}``."""
    abs_s = np.abs(np.asarray(s, dtype=np.float64))
    out = np.zeros_like(abs_s)
    for _term in spec.terms:
        out += _term.lam * _term.alpha * abs_s ** (_term.alpha - 1.0)
    return out if out.ndim else float(out)


class HypothesisReport(BaseModel):
    """Which parts of the main theorem apply to ``(f, d)``."""

    d: int
    in_theorem_scope: bool
    subcritical_i_ii: bool
    part_iii_applicable: bool
    critical_exponent: float | None
    part_iii_exponent: float | None
    p: float | None
    p0: float | None
    epsilon: float | None
    lipschitz_constant: float


def _critical_exponents(d: int) -> tuple[float | None, float | None]:
    """Return ``((d+2)/(d-2), d/(d-2))``; ``None`` (no bound) when ``d ≤ 2``."""
    if d <= 2:
        return None, None
    return (d + 2) / (d - 2), d / (d - 2)


def hypothesis_report(spec: NonlinearitySpec, d: int) -> HypothesisReport:
    """Check the exponent conditions of the main theorem.

    Parts (i) and (ii) need ``p < (d+2)/(d-2)``; part (iii) additionally needs
    ``p ≤ d/(d-2)``. Dimensions below 3 are outside the theorem's scope; the
    report then has no critical exponents and every ``p`` passes.
    """
    if d not in (1, 2, 3):
        raise ValueError(f"d must be 1, 2 or 3, got {d}")

    critical, part_iii = _critical_exponents(d)
    p = spec.p
    return HypothesisReport(
        d=d,
        in_theorem_scope=d >= 3,
        subcritical_i_ii=p is not None and (critical is None or p < critical),
        part_iii_applicable=p is not None and (part_iii is None or p <= part_iii),
        critical_exponent=critical,
        part_iii_exponent=part_iii,
        p=p,
        p0=spec.p0,
        epsilon=spec.epsilon,
        lipschitz_constant=spec.lipschitz_constant,
    )
