"""Play Mode: run a learned engine in real time against live button input.

A play session holds the current fact set; each tick injects the caller's
button state (previous frame's buttons become the Prev variables), applies the
engine, and returns the rendered frame.  Stepping is pure and deterministic;
pacing the ticks is the caller's concern.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from . import facts as F
from .engine import Engine, predict_facts
from .facts import Frame, InputState
from .learning import LearnerConfig

DEFAULT_TICK_RATE = 6  # ticks per second suggested to interactive clients


@dataclass
class PlaySession:
    engine: Engine
    facts: frozenset
    tick_index: int
    config: LearnerConfig
    grid_width: int
    grid_height: int
    universe_ids: frozenset


def start_play(
    engine: Engine,
    initial_frame: Frame,
    universe_ids: Iterable[int] = None,
    config: LearnerConfig = LearnerConfig(),
) -> PlaySession:
    """Session whose state is the initial frame's facts with no buttons down."""
    universe = frozenset(universe_ids) if universe_ids is not None else initial_frame.object_ids()
    facts = F.extract_facts(initial_frame, universe)
    facts = F.replace_variable_facts(facts, InputState())
    return PlaySession(
        engine=engine,
        facts=facts,
        tick_index=0,
        config=config,
        grid_width=initial_frame.grid_width,
        grid_height=initial_frame.grid_height,
        universe_ids=universe,
    )


def _as_pressed(buttons) -> frozenset:
    if isinstance(buttons, Mapping):
        return frozenset(b for b in F.BUTTONS if buttons.get(b, False))
    return frozenset(buttons)


def step(session: PlaySession, buttons) -> Frame:
    """Advance one tick with the given button state; returns the new frame."""
    prev = F.input_from_facts(session.facts).pressed
    injected = InputState(_as_pressed(buttons), prev)
    source = F.replace_variable_facts(session.facts, injected)
    result = predict_facts(
        session.engine,
        source,
        kinematics=session.config.kinematics,
        grid_width=session.grid_width,
        grid_height=session.grid_height,
    )
    session.facts = result.facts
    session.tick_index += 1
    return F.frame_from_facts(
        session.facts,
        index=session.tick_index,
        grid_width=session.grid_width,
        grid_height=session.grid_height,
    )


def run_trace(
    engine: Engine,
    frame0: Frame,
    input_trace: Sequence,
    universe_ids: Iterable[int] = None,
    config: LearnerConfig = LearnerConfig(),
) -> list:
    """Headless playtest: fold ``step`` over a list of button states."""
    session = start_play(engine, frame0, universe_ids, config)
    return [step(session, buttons) for buttons in input_trace]
