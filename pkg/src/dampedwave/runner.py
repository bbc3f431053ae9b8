"""Execute one configured run: evolve, verify, persist.

Artifacts per run directory:

- ``samples.csv``: the diagnostics series, frozen column order.
- ``summary.json``: outcome, norms, hypothesis report and verdicts, with the
  resolved configuration and a format version.
- ``checkpoints/``: binary states when ``outputs.checkpoint_every > 0``.
"""

import logging
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
from pydantic import BaseModel

from src.utils.pretty_printing import to_json
from src.utils.trees import tree_filter

from .config import FORMAT_VERSION, RunConfig, load_run_config
from .diagnostics import (
    DampingProfile,
    DiagnosticsSample,
    WaveState,
    virial_sample,
    write_samples_csv,
)
from .domain import PoincareReport, SpectralDomain
from .errors import ConfigError, InsufficientSamplesError
from .initial_data import load_state
from .integrator import RunOutcome, damped_mode_solution, evolve
from .nonlinearity import HypothesisReport, NonlinearitySpec, hypothesis_report
from .verifier import (
    EstimateVerdict,
    RunFamilyEntry,
    check_concavity_certificate,
    check_energy_monotone_and_bounded,
    check_h1_uniform,
    check_l2_exponential_shape,
    check_mprime_bounds,
    estimate_hyp3_constant,
    hyp3_field_family,
    i0_formula,
)


logger = logging.getLogger(__name__)

EXIT_GLOBAL = 0
EXIT_ERROR = 1
EXIT_BLOWUP = 2

LINEAR_VERIFY_TOLERANCE = 1e-6
PRESETS = Path(__file__).parent / "presets"


class OutcomeSummary(BaseModel):
    """Classification of the run."""

    kind: str
    reason: str
    t_final: float
    confirmed: bool | None
    steps: int


class NormSummary(BaseModel):
    """Norms and energy of one state."""

    t: float
    E: float
    l2_u: float
    l2_v: float
    h1_u: float
    energy_space_norm: float

    @classmethod
    def from_sample(cls, sample: DiagnosticsSample) -> "NormSummary":
        """Pick the fields of a diagnostics row."""
        return cls(
            t=sample.t,
            E=sample.E,
            l2_u=sample.l2_u,
            l2_v=sample.l2_v,
            h1_u=sample.h1_u,
            energy_space_norm=sample.energy_space_norm,
        )


class RunSummary(BaseModel):
    """Content of ``summary.json``."""

    format_version: str = FORMAT_VERSION
    run_id: str
    config: dict[str, Any]
    outcome: OutcomeSummary
    initial: NormSummary
    final: NormSummary
    E0: float
    hypothesis: HypothesisReport
    poincare: PoincareReport
    hyp3_c0: float | None
    i0: float | None
    verdicts: list[EstimateVerdict]
    family: RunFamilyEntry
    error_vs_closed_form: float | None = None

    @property
    def exit_code(self) -> int:
        """0 for a global run, 2 for a detected blow-up."""
        return EXIT_GLOBAL if self.outcome.kind == "global" else EXIT_BLOWUP


def sample_verdicts(
    samples: Sequence[DiagnosticsSample],
    global_run: bool,
    h1_applicable: bool,
    i0: float | None = None,
    epsilon: float | None = None,
    damped: bool = False,
) -> list[EstimateVerdict]:
    """Verdicts computable from a diagnostics series alone.

    Global runs get the energy, L², M' and (when applicable) H¹ checks; blow-up
    runs get the concavity certificate when the nonlinearity defines ``ε``.
    """
    if not global_run:
        if epsilon is None or not samples:
            return []
        return [
            check_concavity_certificate(samples, epsilon, i0 or 0.0, informative=damped)
        ]

    if len(samples) < 2:
        logger.warning("only %d sample(s); estimate checks skipped", len(samples))
        return []
    e0 = samples[0].E
    verdicts = [
        check_energy_monotone_and_bounded(samples, i0=i0),
        check_l2_exponential_shape(samples, e0),
        check_mprime_bounds(samples, e0),
    ]
    if h1_applicable:
        verdicts.append(check_h1_uniform(samples))
    return verdicts


def _family_entry(
    run_id: str,
    outcome: RunOutcome,
    damping: DampingProfile,
    spec: NonlinearitySpec,
    verdicts: Sequence[EstimateVerdict],
    c0: float | None,
) -> RunFamilyEntry:
    constants = {_v.name: _v.fitted_constants for _v in verdicts}
    first = outcome.samples[0]
    return RunFamilyEntry(
        run_id=run_id,
        kind=outcome.kind,
        gamma_inf=damping.gamma_inf,
        E0=first.E,
        min_E=constants.get("energy_monotone_and_bounded", {}).get("min_E"),
        l2_A=constants.get("l2_exponential_shape", {}).get("A"),
        sup_abs_mprime=constants.get("mprime_bounds", {}).get("B"),
        sup_norm=constants.get("h1_uniform", {}).get("sup_norm"),
        initial_norm_sq=first.h1_u + first.l2_v,
        hyp3_c0=c0,
        epsilon=spec.epsilon,
        p0=spec.p0,
    )


def execute_run(
    cfg: RunConfig,
    out_dir: Path,
    run_id: str = "run",
    threads: int | None = None,
    resume: Path | None = None,
    observer: Callable[[WaveState], None] | None = None,
) -> RunSummary:
    """Run ``cfg`` into ``out_dir`` and return its summary.

    Raises
    ------
    ConfigError
        When the domain fails the Poincaré check.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    dom = cfg.domain.build(workers=threads)
    poincare = dom.poincare_check()
    if not poincare.ok:
        raise ConfigError(f"Poincaré: λ₁+β ≤ 0 (λ₁+β = {poincare.lambda1_plus_beta})")
    spec = cfg.nonlinearity
    damping = cfg.damping.build(dom)
    report = hypothesis_report(spec, dom.d)

    initial = load_state(resume, dom) if resume is not None else cfg.initial.build(dom)
    if resume is not None:
        logger.info("resuming %s from t=%.6g", run_id, initial.t)

    checkpoint_dir = None
    if cfg.outputs.checkpoint_every:
        checkpoint_dir = out_dir / "checkpoints"
        checkpoint_dir.mkdir(exist_ok=True)

    outcome = evolve(
        initial,
        spec,
        dom,
        damping,
        cfg.stepper,
        observer=observer,
        snapshot_every=cfg.outputs.snapshot_every,
        checkpoint_dir=checkpoint_dir,
        checkpoint_every=cfg.outputs.checkpoint_every,
    )
    write_samples_csv(outcome.samples, out_dir / "samples.csv")

    c0 = i0 = None
    if not spec.is_zero:
        family_fields = hyp3_field_family(dom, cfg.initial.seed, outcome.snapshots)
        c0 = estimate_hyp3_constant(dom, spec, family_fields, cfg.stepper.dealias)
        i0 = i0_formula(c0, damping.gamma_inf, spec.epsilon, spec.p0)

    verdicts = sample_verdicts(
        outcome.samples,
        global_run=outcome.is_global,
        h1_applicable=spec.is_zero or report.part_iii_applicable,
        i0=i0,
        epsilon=spec.epsilon,
        damped=damping.gamma_inf > 0,
    )
    for verdict in verdicts:
        if not verdict.holds and not verdict.informative:
            logger.warning("%s: %s fails (%s)", run_id, verdict.name, verdict.details)

    final = virial_sample(
        outcome.final_state,
        spec,
        dom,
        damping,
        cfg.stepper.dealias,
        cfg.stepper.pad_factor,
    )
    summary = RunSummary(
        run_id=run_id,
        config=tree_filter(cfg.model_dump(mode="json", by_alias=True)),
        outcome=OutcomeSummary(
            kind=outcome.kind,
            reason=outcome.reason,
            t_final=outcome.t_final,
            confirmed=outcome.confirmed,
            steps=outcome.steps,
        ),
        initial=NormSummary.from_sample(outcome.samples[0]),
        final=NormSummary.from_sample(final),
        E0=outcome.samples[0].E,
        hypothesis=report,
        poincare=poincare,
        hyp3_c0=c0,
        i0=i0,
        verdicts=verdicts,
        family=_family_entry(run_id, outcome, damping, spec, verdicts, c0),
    )
    write_summary(summary, out_dir)
    logger.info("%s: %s (%s) at t=%.6g", run_id, outcome.kind, outcome.reason, outcome.t_final)
    return summary


def write_summary(summary: RunSummary, out_dir: Path) -> None:
    """Write ``summary.json`` (sorted keys, strict JSON)."""
    (Path(out_dir) / "summary.json").write_text(to_json(summary) + "\n")


def read_summary(out_dir: Path) -> RunSummary:
    """Read ``summary.json`` back."""
    return RunSummary.model_validate_json((Path(out_dir) / "summary.json").read_text())


def linear_verify_config() -> RunConfig:
    """Preset: ``f = 0``, ``γ = 1``, mode ``(1,1,1)`` on ``[0,π]³``, ``dt = 1e-3``."""
    return load_run_config(PRESETS / "linear_verify.toml")


def run_linear_verify(
    cfg: RunConfig, out_dir: Path, threads: int | None = None
) -> RunSummary:
    """Run a linear single-mode config and compare with the damped-oscillator solution.

    Records ``error_vs_closed_form``, the largest deviation of the tracked mode
    amplitude over all samples.

    Raises
    ------
    ConfigError
        Unless ``f = 0``, damping is constant and the data is one mode.
    """
    if not cfg.nonlinearity.is_zero:
        raise ConfigError("linear-verify needs an empty nonlinearity")
    if cfg.damping.kind != "constant":
        raise ConfigError("linear-verify needs constant damping")
    if cfg.initial.kind != "modes" or len(cfg.initial.modes) != 1:
        raise ConfigError("linear-verify needs exactly one initial mode")

    mode = cfg.initial.modes[0]
    dom: SpectralDomain = cfg.domain.build(workers=threads)
    unit = dom.mode_field(mode.k)
    index = np.unravel_index(int(np.argmax(np.abs(unit))), unit.shape)
    omega0_sq = float(dom.eigenvalues[index] + dom.beta)
    errors: list[float] = []

    def observe(state: WaveState) -> None:
        amplitude = float(np.real(state.u_hat[index] / unit[index]))
        exact = damped_mode_solution(mode.u, mode.v, omega0_sq, cfg.damping.value, state.t)
        errors.append(abs(amplitude - exact))

    summary = execute_run(cfg, out_dir, run_id=cfg.name, threads=threads, observer=observe)
    if not errors:
        raise InsufficientSamplesError("no samples were recorded")
    error = max(errors)
    summary = summary.model_copy(update={"error_vs_closed_form": error})
    write_summary(summary, out_dir)
    logger.info("linear-verify: error vs closed form %.3e", error)
    return summary
