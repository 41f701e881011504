"""Learn executable grid-game rules from demonstrated frames.

The package is organized around a small pipeline: frames become fact sets
(``facts``), engines rewrite fact sets (``engine``), the learner searches for
an engine that reproduces a demonstration (``learning``), and the runtime
plays it back against live input (``runtime``).  ``persistence`` handles the
file formats, ``evaluation`` the frame-error metric, ``analysis`` the rule
clustering, ``service`` the editor-facing message protocol, and ``cli`` the
headless entry points.
"""

from .engine import Engine, PredictionResult, Rule, frame_distance, predict_facts, rule_fires
from .facts import Fact, Frame, GameObject, InputState, SpriteRef, derive_velocities, extract_facts
from .learning import LearnerConfig, LearnResult, UnmatchedPair, learn
from .runtime import PlaySession, run_trace, start_play, step

__all__ = [
    "Engine",
    "Fact",
    "Frame",
    "GameObject",
    "InputState",
    "LearnerConfig",
    "LearnResult",
    "PlaySession",
    "PredictionResult",
    "Rule",
    "SpriteRef",
    "UnmatchedPair",
    "derive_velocities",
    "extract_facts",
    "frame_distance",
    "learn",
    "predict_facts",
    "rule_fires",
    "run_trace",
    "start_play",
    "step",
]
