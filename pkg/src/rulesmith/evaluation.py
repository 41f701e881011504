"""Frame error against a reference demonstration, plus the identity baseline.

Frame error predicts each reference frame from the prior one (teacher-forced,
with the next frame's buttons injected) and averages the normalized fact-set
distance.  The baseline predicts "nothing changes": it is exactly what an
empty engine produces with kinematics off, so an engine that learned nothing
scores the baseline, and any useful rule has to beat it.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

from .engine import Engine, frame_distance, predict_facts
from .errors import InsufficientDataError
from .learning import Demonstration, LearnerConfig, prepare_demonstration


@dataclass(frozen=True)
class EvalReport:
    per_transition_error: tuple
    per_transition_baseline: tuple
    mean_error: float
    baseline_mean_error: float
    beat_baseline: bool

    def to_json(self) -> dict:
        return {
            "perTransitionError": list(self.per_transition_error),
            "perTransitionBaseline": list(self.per_transition_baseline),
            "meanError": self.mean_error,
            "baselineMeanError": self.baseline_mean_error,
            "beatBaseline": self.beat_baseline,
        }


def _transition_errors(engine: Engine, demo: Demonstration, config: LearnerConfig) -> list:
    errors = []
    for t in range(len(demo) - 1):
        pred = predict_facts(
            engine,
            demo.source_facts(t),
            kinematics=config.kinematics,
            grid_width=demo.grid_width,
            grid_height=demo.grid_height,
        )
        errors.append(frame_distance(pred.facts, demo.fact_frames[t + 1])[1])
    return errors


def _baseline_errors(demo: Demonstration) -> list:
    return [
        frame_distance(demo.source_facts(t), demo.fact_frames[t + 1])[1]
        for t in range(len(demo) - 1)
    ]


def baseline_error(reference_frames, config: LearnerConfig = LearnerConfig()) -> float:
    """Mean error of predicting each next frame as the unchanged previous frame."""
    if len(reference_frames) < 2:
        raise InsufficientDataError("baseline needs at least 2 reference frames")
    errors = _baseline_errors(prepare_demonstration(reference_frames, config))
    return sum(errors) / len(errors)


def frame_error(engine: Engine, reference_frames, config: LearnerConfig = LearnerConfig()) -> EvalReport:
    if len(reference_frames) < 2:
        raise InsufficientDataError("frame error needs at least 2 reference frames")
    demo = prepare_demonstration(reference_frames, config)
    errors = _transition_errors(engine, demo, config)
    base = _baseline_errors(demo)
    mean = sum(errors) / len(errors)
    base_mean = sum(base) / len(base)
    return EvalReport(
        per_transition_error=tuple(errors),
        per_transition_baseline=tuple(base),
        mean_error=mean,
        baseline_mean_error=base_mean,
        beat_baseline=mean < base_mean,
    )


def write_report_json(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_report_csv(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["transition", "engine_error", "baseline_error"])
        for t, (err, base) in enumerate(
            zip(report.per_transition_error, report.per_transition_baseline)
        ):
            writer.writerow([t, f"{err:.6f}", f"{base:.6f}"])
