"""Grid frames, input state, and the fact language extracted from them.

A demonstration is a sequence of frames: objects placed on a small grid plus
the button state for that instant.  Everything the learner reasons about is a
``Fact`` -- an atomic proposition about one frame.  This module defines the
immutable frame model, the nine fact kinds, velocity derivation from
consecutive positions, and the frame -> fact-set translation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .errors import MalformedFrameError

DEFAULT_GRID_WIDTH = 12
DEFAULT_GRID_HEIGHT = 9
DEFAULT_VMAX = 3

BUTTONS = ("space", "up", "down", "left", "right")
PREV_SUFFIX = "Prev"
#: Canonical variable order: the five live buttons, then their previous-frame twins.
BUTTON_ORDER = BUTTONS + tuple(b + PREV_SUFFIX for b in BUTTONS)
_BUTTON_RANK = {name: i for i, name in enumerate(BUTTON_ORDER)}

# Fact kinds.
ANIMATION = "animation"
VELOCITY_X = "velocityX"
VELOCITY_Y = "velocityY"
POSITION_X = "positionX"
POSITION_Y = "positionY"
VARIABLE = "variable"
RELATIONSHIP_X = "relationshipX"
RELATIONSHIP_Y = "relationshipY"
EMPTY = "empty"

FACT_KINDS = (
    ANIMATION,
    VELOCITY_X,
    VELOCITY_Y,
    POSITION_X,
    POSITION_Y,
    VARIABLE,
    RELATIONSHIP_X,
    RELATIONSHIP_Y,
    EMPTY,
)
_KIND_RANK = {kind: i for i, kind in enumerate(FACT_KINDS)}

OBJECT_FACT_KINDS = (ANIMATION, VELOCITY_X, VELOCITY_Y, POSITION_X, POSITION_Y)
RELATIONSHIP_KINDS = (RELATIONSHIP_X, RELATIONSHIP_Y)


@dataclass(frozen=True)
class SpriteRef:
    """A named sprite with its footprint in grid cells."""

    name: str
    width: int = 1
    height: int = 1

    def __post_init__(self):
        if not self.name:
            raise ValueError("sprite name must be nonempty")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"sprite {self.name!r} extents must be >= 1")


@dataclass(frozen=True)
class GameObject:
    """One placed object: sprite, anchor cell, and per-axis cell velocity.

    ``vx_user``/``vy_user`` mark velocities the user set explicitly; derivation
    never overwrites those.
    """

    id: int
    sprite: SpriteRef
    x: int
    y: int
    vx: int = 0
    vy: int = 0
    vx_user: bool = False
    vy_user: bool = False

    def __post_init__(self):
        if self.id < 0:
            raise ValueError("object id must be non-negative")


@dataclass(frozen=True)
class InputState:
    """Button state for one frame: currently pressed plus previous frame's."""

    pressed: frozenset = frozenset()
    prev_pressed: frozenset = frozenset()

    def __post_init__(self):
        for group in (self.pressed, self.prev_pressed):
            unknown = set(group) - set(BUTTONS)
            if unknown:
                raise ValueError(f"unknown buttons: {sorted(unknown)}")

    @classmethod
    def make(cls, pressed: Iterable[str] = (), prev: Iterable[str] = ()) -> "InputState":
        return cls(frozenset(pressed), frozenset(prev))

    @classmethod
    def from_maps(cls, buttons: Mapping[str, bool], prev_buttons: Mapping[str, bool]) -> "InputState":
        return cls(
            frozenset(b for b in BUTTONS if buttons.get(b, False)),
            frozenset(b for b in BUTTONS if prev_buttons.get(b, False)),
        )

    def button_map(self) -> dict:
        return {b: (b in self.pressed) for b in BUTTONS}

    def prev_button_map(self) -> dict:
        return {b: (b in self.prev_pressed) for b in BUTTONS}

    def variable_facts(self) -> frozenset:
        facts = {variable(b, b in self.pressed) for b in BUTTONS}
        facts |= {variable(b + PREV_SUFFIX, b in self.prev_pressed) for b in BUTTONS}
        return frozenset(facts)


@dataclass(frozen=True)
class Frame:
    """A grid snapshot: placed objects plus the input state for that instant."""

    index: int
    grid_width: int = DEFAULT_GRID_WIDTH
    grid_height: int = DEFAULT_GRID_HEIGHT
    objects: tuple = ()
    input: InputState = field(default_factory=InputState)

    def __post_init__(self):
        if self.index < 0:
            raise MalformedFrameError(f"frame index {self.index} is negative")
        if self.grid_width < 1 or self.grid_height < 1:
            raise MalformedFrameError("grid dimensions must be positive")
        seen = set()
        for obj in self.objects:
            if obj.id in seen:
                raise MalformedFrameError(
                    f"frame {self.index}: duplicate object id {obj.id}"
                )
            seen.add(obj.id)
            if not (0 <= obj.x < self.grid_width and 0 <= obj.y < self.grid_height):
                raise MalformedFrameError(
                    f"frame {self.index}: object {obj.id} at ({obj.x}, {obj.y}) "
                    f"outside {self.grid_width}x{self.grid_height} grid"
                )

    def object_ids(self) -> frozenset:
        return frozenset(obj.id for obj in self.objects)

    def object_by_id(self, obj_id: int):
        for obj in self.objects:
            if obj.id == obj_id:
                return obj
        return None


@dataclass(frozen=True)
class Fact:
    """One atomic proposition about a frame.

    kind/subject/value together are the identity; ``subject`` is an object id,
    a button name, or an ordered ``(a, b)`` id pair depending on the kind.
    """

    kind: str
    subject: object
    value: object = None

    def __repr__(self):  # compact, fact-set dumps get long otherwise
        return f"{self.kind}({self.subject!r}, {self.value!r})"


def animation(obj_id: int, sprite_name: str, width: int, height: int) -> Fact:
    return Fact(ANIMATION, obj_id, (sprite_name, width, height))


def velocity_x(obj_id: int, value: int) -> Fact:
    return Fact(VELOCITY_X, obj_id, value)


def velocity_y(obj_id: int, value: int) -> Fact:
    return Fact(VELOCITY_Y, obj_id, value)


def position_x(obj_id: int, value: int) -> Fact:
    return Fact(POSITION_X, obj_id, value)


def position_y(obj_id: int, value: int) -> Fact:
    return Fact(POSITION_Y, obj_id, value)


def variable(name: str, value: bool) -> Fact:
    if name not in _BUTTON_RANK:
        raise ValueError(f"unknown variable {name!r}")
    return Fact(VARIABLE, name, bool(value))


def relationship_x(a: int, b: int, offset: int) -> Fact:
    return Fact(RELATIONSHIP_X, (a, b), offset)


def relationship_y(a: int, b: int, offset: int) -> Fact:
    return Fact(RELATIONSHIP_Y, (a, b), offset)


def empty(obj_id: int) -> Fact:
    return Fact(EMPTY, obj_id, None)


def slot(fact: Fact) -> tuple:
    """Identity key pairing pre/post effects: (kind, subject).

    An empty fact occupies the animation slot of its (absent) object id, so
    appear/disappear rules rewrite a single well-defined slot.
    """
    if fact.kind == EMPTY:
        return (ANIMATION, fact.subject)
    return (fact.kind, fact.subject)


def _subject_key(subject) -> tuple:
    if isinstance(subject, tuple):
        return subject
    if isinstance(subject, str):
        return (_BUTTON_RANK[subject],)
    return (subject,)


def slot_sort_key(s: tuple) -> tuple:
    """Deterministic ordering over slots: kind rank, then subject."""
    kind, subject = s
    return (_KIND_RANK[kind], _subject_key(subject))


def clamp(value: int, low: int, high: int) -> int:
    return max(low, min(high, value))


def derive_velocities(frames: Sequence[Frame], vmax: int = DEFAULT_VMAX) -> list:
    """Fill in per-object velocities from consecutive positions.

    For an object present in the previous frame, velocity is the position
    delta; a delta beyond ``vmax`` is a teleport and the previous velocity
    carries over.  Frame-0 objects and fresh appearances get zero velocity.
    User-set velocities are kept as given.
    """
    if not frames:
        return []
    out = []
    prev_objs: dict = {}
    for frame in frames:
        derived = []
        for obj in frame.objects:
            prior = prev_objs.get(obj.id)
            vx, vy = 0, 0
            if prior is not None:
                dx = obj.x - prior.x
                dy = obj.y - prior.y
                vx = dx if abs(dx) <= vmax else prior.vx
                vy = dy if abs(dy) <= vmax else prior.vy
            if obj.vx_user:
                vx = obj.vx
            if obj.vy_user:
                vy = obj.vy
            derived.append(replace(obj, vx=vx, vy=vy))
        new_frame = replace(frame, objects=tuple(derived))
        out.append(new_frame)
        prev_objs = {o.id: o for o in derived}
    return out


def _box_gap(a0: int, alen: int, b0: int, blen: int) -> int:
    """Cell gap between two 1-d extents (0 when touching or overlapping)."""
    return max(b0 - (a0 + alen - 1), a0 - (b0 + blen - 1), 0)


def in_contact(a: GameObject, b: GameObject) -> bool:
    """True when the sprite bounding boxes are within Chebyshev distance 1."""
    gx = _box_gap(a.x, a.sprite.width, b.x, b.sprite.width)
    gy = _box_gap(a.y, a.sprite.height, b.y, b.sprite.height)
    return max(gx, gy) <= 1


def relationship_facts(objects: Sequence[GameObject]) -> set:
    """Relationship facts for every ordered pair of touching objects."""
    facts = set()
    objs = sorted(objects, key=lambda o: o.id)
    for i, a in enumerate(objs):
        for b in objs[i + 1:]:
            if not in_contact(a, b):
                continue
            facts.add(relationship_x(a.id, b.id, a.x - b.x))
            facts.add(relationship_x(b.id, a.id, b.x - a.x))
            facts.add(relationship_y(a.id, b.id, a.y - b.y))
            facts.add(relationship_y(b.id, a.id, b.y - a.y))
    return facts


def extract_facts(frame: Frame, universe_ids: Iterable[int] = None) -> frozenset:
    """Translate a frame into its fact set.

    Emits animation/velocity/position facts per present object, the ten
    variable facts, one empty fact per universe id absent from the frame, and
    relationship facts for touching pairs.
    """
    facts = set()
    present = set()
    for obj in frame.objects:
        present.add(obj.id)
        facts.add(animation(obj.id, obj.sprite.name, obj.sprite.width, obj.sprite.height))
        facts.add(velocity_x(obj.id, obj.vx))
        facts.add(velocity_y(obj.id, obj.vy))
        facts.add(position_x(obj.id, obj.x))
        facts.add(position_y(obj.id, obj.y))
    facts |= frame.input.variable_facts()
    if universe_ids is not None:
        for missing in set(universe_ids) - present:
            facts.add(empty(missing))
    facts |= relationship_facts(frame.objects)
    return frozenset(facts)


def replace_variable_facts(facts: frozenset, input_state: InputState) -> frozenset:
    """Swap the ten variable facts for the given input state."""
    kept = {f for f in facts if f.kind != VARIABLE}
    return frozenset(kept) | input_state.variable_facts()


def input_from_facts(facts: frozenset) -> InputState:
    pressed = set()
    prev = set()
    for f in facts:
        if f.kind != VARIABLE or not f.value:
            continue
        if f.subject.endswith(PREV_SUFFIX):
            prev.add(f.subject[: -len(PREV_SUFFIX)])
        else:
            pressed.add(f.subject)
    return InputState(frozenset(pressed), frozenset(prev))


def objects_from_facts(facts: frozenset) -> list:
    """Rebuild game objects from a fact set; ids with empty facts are omitted."""
    anims = {f.subject: f.value for f in facts if f.kind == ANIMATION}
    xs = {f.subject: f.value for f in facts if f.kind == POSITION_X}
    ys = {f.subject: f.value for f in facts if f.kind == POSITION_Y}
    vxs = {f.subject: f.value for f in facts if f.kind == VELOCITY_X}
    vys = {f.subject: f.value for f in facts if f.kind == VELOCITY_Y}
    objects = []
    for obj_id in sorted(anims):
        name, w, h = anims[obj_id]
        objects.append(
            GameObject(
                id=obj_id,
                sprite=SpriteRef(name, w, h),
                x=xs.get(obj_id, 0),
                y=ys.get(obj_id, 0),
                vx=vxs.get(obj_id, 0),
                vy=vys.get(obj_id, 0),
            )
        )
    return objects


def frame_from_facts(
    facts: frozenset,
    index: int,
    grid_width: int = DEFAULT_GRID_WIDTH,
    grid_height: int = DEFAULT_GRID_HEIGHT,
) -> Frame:
    return Frame(
        index=index,
        grid_width=grid_width,
        grid_height=grid_height,
        objects=tuple(objects_from_facts(facts)),
        input=input_from_facts(facts),
    )


def universe_of(frames: Sequence[Frame]) -> frozenset:
    """All object ids appearing anywhere in a demonstration."""
    ids = set()
    for frame in frames:
        ids |= frame.object_ids()
    return frozenset(ids)
