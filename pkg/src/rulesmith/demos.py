"""Built-in reference demonstrations and the hand-built jump-rule fixture.

Two small games ship with the repo:

* ``sokoban`` -- hold right to walk, push the crate one cell when adjacent,
  stop when the key is released.
* ``flappy`` -- the bird falls under gravity, one space press flips its
  vertical velocity to +1 for a tick, and the pipe drifts left until it
  reaches the edge and teleports back to the right side.

Both are authored so a zero-threshold learner reproduces every transition
exactly.  ``jump_rule`` is the classic hand-built rule (bird jump guarded by
the space bar) used as the golden fixture for the text exporter.
"""

from __future__ import annotations

from .engine import Engine, Rule
from .errors import RulesmithError
from .facts import (
    Frame,
    GameObject,
    InputState,
    SpriteRef,
    animation,
    variable,
    velocity_x,
    velocity_y,
    position_y,
)
from .persistence import Project

BIRD = SpriteRef("bird", 1, 1)
PIPE = SpriteRef("longblock", 1, 4)
PLAYER = SpriteRef("player", 1, 1)
CRATE = SpriteRef("crate", 1, 1)
BLOCK = SpriteRef("block", 1, 1)


def _frame(index, objects, pressed=(), prev=()):
    return Frame(
        index=index,
        objects=tuple(objects),
        input=InputState.make(pressed, prev),
    )


def flappy_frames() -> list:
    """Fall, one space-press jump, pipe drift with an edge teleport."""
    bird = lambda x, y: GameObject(0, BIRD, x, y)
    pipe = lambda x: GameObject(1, PIPE, x, 0)
    return [
        _frame(0, [bird(2, 5), pipe(3)]),
        _frame(1, [bird(2, 4), pipe(2)]),
        _frame(2, [bird(2, 3), pipe(1)]),
        _frame(3, [bird(2, 4), pipe(0)], pressed=("space",)),
        _frame(4, [bird(2, 3), pipe(11)], prev=("space",)),
        _frame(5, [bird(2, 2), pipe(10)]),
    ]


def sokoban_frames() -> list:
    """Walk right under the right key, push the crate, stop on release.

    The crate keeps its momentum one frame longer than the player so the two
    stop transitions are demonstrated separately.
    """
    player = lambda x: GameObject(0, PLAYER, x, 4)
    crate = lambda x: GameObject(1, CRATE, x, 4)
    return [
        _frame(0, [player(1), crate(4)]),
        _frame(1, [player(2), crate(4)], pressed=("right",)),
        _frame(2, [player(3), crate(4)], pressed=("right",), prev=("right",)),
        _frame(3, [player(4), crate(5)], pressed=("right",), prev=("right",)),
        _frame(4, [player(4), crate(6)], prev=("right",)),
        _frame(5, [player(4), crate(6)]),
    ]


def contradictory_frames() -> list:
    """A static state followed once by itself and once by a teleport.

    Frames 0 and 1 extract to the same fact set, yet the successor differs
    (stay put vs. jump four cells), so no deterministic engine can satisfy
    both transitions -- this is the budget-exhaustion fixture.
    """
    block = lambda x: GameObject(0, BLOCK, x, 5)
    return [
        _frame(0, [block(5)]),
        _frame(1, [block(5)]),
        _frame(2, [block(9)]),
    ]


def flappy_project() -> Project:
    return Project(name="flappy", sprites=(BIRD, PIPE), frames=tuple(flappy_frames()))


def sokoban_project() -> Project:
    return Project(name="sokoban", sprites=(PLAYER, CRATE), frames=tuple(sokoban_frames()))


def contradictory_project() -> Project:
    return Project(name="contradictory", sprites=(BLOCK,), frames=tuple(contradictory_frames()))


FIXTURES = {
    "flappy": flappy_project,
    "sokoban": sokoban_project,
    "contradictory": contradictory_project,
}


def named_fixture(name: str) -> Project:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise RulesmithError(
            f"unknown fixture {name!r} (have: {', '.join(sorted(FIXTURES))})"
        ) from None


def jump_rule(with_pipe_position: bool = False, rule_id: int = 2) -> Rule:
    """The hand-built bird-jump rule.

    The bird (id 0) is falling at -1 and flips to +1 while the space bar is
    down and the pipe (id 1) drifts left.  The variant with the pipe's
    position condition pins the pipe row as well.
    """
    conditions = {
        variable("space", True),
        variable("up", False),
        variable("down", False),
        variable("left", False),
        variable("right", False),
        variable("upPrev", False),
        variable("downPrev", False),
        variable("leftPrev", False),
        variable("rightPrev", False),
        velocity_y(1, 0),
        velocity_x(1, -1),
        animation(1, "longblock", 1, 4),
        velocity_x(0, 0),
        velocity_y(0, -1),
        animation(0, "bird", 1, 1),
    }
    if with_pipe_position:
        conditions.add(position_y(1, 0))
    return Rule(
        id=rule_id,
        pre=velocity_y(0, -1),
        post=velocity_y(0, 1),
        conditions=frozenset(conditions),
    )


def jump_rule_engine() -> Engine:
    rule = jump_rule()
    return Engine(rules=(rule,), next_rule_id=rule.id + 1)
