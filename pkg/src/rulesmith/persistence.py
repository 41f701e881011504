"""Project files, engine serialization, and the append-only event log.

Formats:
  *.mmproj      -- project JSON (schemaVersion 1): grid, sprites, frames, the
                   learned engine if any, and config overrides.
  *.engine.json -- structured engine JSON, lossless round-trip.
  *.engine.txt  -- human-readable rule listing (one RULE header per rule with
                   4-space-indented condition lines).
  events.jsonl  -- append-only log, one JSON object per line.

All serialization is canonical: condition facts are written in a fixed order,
so serialize . deserialize . serialize == serialize.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Mapping

from . import facts as F
from .engine import Engine, Rule
from .errors import SchemaError, VersionError
from .facts import (
    ANIMATION,
    BUTTON_ORDER,
    EMPTY,
    POSITION_X,
    POSITION_Y,
    RELATIONSHIP_X,
    RELATIONSHIP_Y,
    VARIABLE,
    VELOCITY_X,
    VELOCITY_Y,
    Fact,
    Frame,
    GameObject,
    InputState,
    SpriteRef,
)
from .learning import LearnerConfig
from .runtime import DEFAULT_TICK_RATE

PROJECT_SCHEMA_VERSION = 1
ENGINE_SCHEMA_VERSION = 1

EVENT_KINDS = frozenset(
    {
        "frame-edited",
        "prediction-shown",
        "prediction-accepted",
        "learn-started",
        "learn-finished",
        "play-started",
        "play-ended",
        "project-saved",
    }
)


@dataclass(frozen=True)
class Project:
    name: str
    grid_width: int = F.DEFAULT_GRID_WIDTH
    grid_height: int = F.DEFAULT_GRID_HEIGHT
    sprites: tuple = ()
    frames: tuple = ()
    engine: Engine = None
    config: LearnerConfig = field(default_factory=LearnerConfig)
    tick_rate: int = DEFAULT_TICK_RATE

    def __post_init__(self):
        # Sprites are a set; keep them in name order so equal projects compare
        # equal regardless of declaration order.
        object.__setattr__(
            self, "sprites", tuple(sorted(set(self.sprites), key=lambda s: s.name))
        )
        declared = {s.name for s in self.sprites}
        for frame in self.frames:
            for obj in frame.objects:
                if obj.sprite.name not in declared:
                    raise SchemaError(
                        f"frame {frame.index} uses undeclared sprite {obj.sprite.name!r}"
                    )


@dataclass(frozen=True)
class EventRecord:
    timestamp_ms: int
    kind: str
    payload: Mapping

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise SchemaError(f"unknown event kind {self.kind!r}")


# ---------------------------------------------------------------------------
# Canonical fact ordering and text rendering.
#
# Condition order in exports: variable facts in fixed button order, then
# per-object facts with higher ids first (velocities sorted by absolute value,
# then animation, then position y/x, then empty), then relationship facts.
# The order is cosmetic but pinned so golden files stay stable.
# ---------------------------------------------------------------------------

def canonical_fact_key(fact: Fact) -> tuple:
    if fact.kind == VARIABLE:
        return (0, BUTTON_ORDER.index(fact.subject), 0, 0, 0)
    if fact.kind in (VELOCITY_X, VELOCITY_Y):
        axis = 0 if fact.kind == VELOCITY_X else 1
        return (1, -fact.subject, 0, abs(fact.value), axis)
    if fact.kind == ANIMATION:
        return (1, -fact.subject, 1, 0, 0)
    if fact.kind in (POSITION_X, POSITION_Y):
        axis = 0 if fact.kind == POSITION_Y else 1
        return (1, -fact.subject, 2, axis, 0)
    if fact.kind == EMPTY:
        return (1, -fact.subject, 3, 0, 0)
    a, b = fact.subject
    axis = 0 if fact.kind == RELATIONSHIP_X else 1
    return (2, a, b, axis, 0)


def sorted_conditions(conditions) -> list:
    return sorted(conditions, key=canonical_fact_key)


_TEXT_NAMES = {
    ANIMATION: "AnimationFact",
    VELOCITY_X: "VelocityXFact",
    VELOCITY_Y: "VelocityYFact",
    POSITION_X: "PositionXFact",
    POSITION_Y: "PositionYFact",
    VARIABLE: "VariableFact",
    RELATIONSHIP_X: "RelationshipXFact",
    RELATIONSHIP_Y: "RelationshipYFact",
    EMPTY: "EmptyFact",
}


def fact_text(fact: Fact) -> str:
    """Render one fact the way the rule listing prints it.

    Velocities print untouched zeros as plain ``0`` and everything else with
    one decimal; positions and sprite extents always carry one decimal.
    """
    name = _TEXT_NAMES[fact.kind]
    if fact.kind == ANIMATION:
        sprite, w, h = fact.value
        return f"{name}: [{fact.subject}, '{sprite}', {float(w):.1f}, {float(h):.1f}]"
    if fact.kind in (VELOCITY_X, VELOCITY_Y):
        value = "0" if fact.value == 0 else f"{float(fact.value):.1f}"
        return f"{name}: [{fact.subject}, {value}]"
    if fact.kind in (POSITION_X, POSITION_Y):
        return f"{name}: [{fact.subject}, {float(fact.value):.1f}]"
    if fact.kind == VARIABLE:
        return f"{name}: ['{fact.subject}', {fact.value}]"
    if fact.kind == EMPTY:
        return f"{name}: [{fact.subject}]"
    a, b = fact.subject
    return f"{name}: [{a}, {b}, {float(fact.value):.1f}]"


def export_engine_text(engine: Engine) -> str:
    lines = []
    for rule in engine.rules:
        lines.append(f"RULE: {rule.id} {fact_text(rule.pre)}->{fact_text(rule.post)}")
        for condition in sorted_conditions(rule.conditions):
            lines.append(f"    {fact_text(condition)}")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# JSON encoding.
# ---------------------------------------------------------------------------

def fact_to_json(fact: Fact) -> dict:
    if fact.kind == ANIMATION:
        sprite, w, h = fact.value
        return {"type": ANIMATION, "objectId": fact.subject, "sprite": sprite, "width": w, "height": h}
    if fact.kind in (VELOCITY_X, VELOCITY_Y, POSITION_X, POSITION_Y):
        return {"type": fact.kind, "objectId": fact.subject, "value": fact.value}
    if fact.kind == VARIABLE:
        return {"type": VARIABLE, "button": fact.subject, "value": fact.value}
    if fact.kind == EMPTY:
        return {"type": EMPTY, "objectId": fact.subject}
    a, b = fact.subject
    return {"type": fact.kind, "a": a, "b": b, "offset": fact.value}


def _require(doc: Mapping, key: str, kinds, where: str):
    if not isinstance(doc, Mapping) or key not in doc:
        raise SchemaError(f"{where}: missing field {key!r}")
    value = doc[key]
    if not isinstance(value, kinds):
        raise SchemaError(f"{where}: field {key!r} has wrong type")
    return value


def _int_field(doc, key, where):
    value = _require(doc, key, (int,), where)
    if isinstance(value, bool):
        raise SchemaError(f"{where}: field {key!r} has wrong type")
    return value


def fact_from_json(doc: Mapping, where: str = "fact") -> Fact:
    kind = _require(doc, "type", str, where)
    try:
        if kind == ANIMATION:
            return F.animation(
                _int_field(doc, "objectId", where),
                _require(doc, "sprite", str, where),
                _int_field(doc, "width", where),
                _int_field(doc, "height", where),
            )
        if kind in (VELOCITY_X, VELOCITY_Y, POSITION_X, POSITION_Y):
            return Fact(kind, _int_field(doc, "objectId", where), _int_field(doc, "value", where))
        if kind == VARIABLE:
            return F.variable(_require(doc, "button", str, where), _require(doc, "value", bool, where))
        if kind == EMPTY:
            return F.empty(_int_field(doc, "objectId", where))
        if kind in (RELATIONSHIP_X, RELATIONSHIP_Y):
            return Fact(kind, (_int_field(doc, "a", where), _int_field(doc, "b", where)), _int_field(doc, "offset", where))
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from exc
    raise SchemaError(f"{where}: unknown fact type {kind!r}")


def rule_to_json(rule: Rule) -> dict:
    return {
        "id": rule.id,
        "pre": fact_to_json(rule.pre),
        "post": fact_to_json(rule.post),
        "conditions": [fact_to_json(c) for c in sorted_conditions(rule.conditions)],
    }


def rule_from_json(doc: Mapping, where: str = "rule") -> Rule:
    conditions = _require(doc, "conditions", list, where)
    try:
        return Rule(
            id=_int_field(doc, "id", where),
            pre=fact_from_json(_require(doc, "pre", Mapping, where), f"{where}.pre"),
            post=fact_from_json(_require(doc, "post", Mapping, where), f"{where}.post"),
            conditions=frozenset(
                fact_from_json(c, f"{where}.conditions[{i}]") for i, c in enumerate(conditions)
            ),
        )
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def engine_to_json(engine: Engine) -> dict:
    return {
        "schemaVersion": ENGINE_SCHEMA_VERSION,
        "nextRuleId": engine.next_rule_id,
        "rules": [rule_to_json(r) for r in engine.rules],
    }


def engine_from_json(doc: Mapping, where: str = "engine") -> Engine:
    version = _int_field(doc, "schemaVersion", where)
    if version != ENGINE_SCHEMA_VERSION:
        raise VersionError(f"{where}: unsupported schemaVersion {version}")
    rules = _require(doc, "rules", list, where)
    parsed = tuple(rule_from_json(r, f"{where}.rules[{i}]") for i, r in enumerate(rules))
    ids = [r.id for r in parsed]
    if len(set(ids)) != len(ids):
        raise SchemaError(f"{where}: duplicate rule ids")
    next_id = _int_field(doc, "nextRuleId", where)
    if ids and next_id <= max(ids):
        raise SchemaError(f"{where}: nextRuleId {next_id} not above existing ids")
    return Engine(rules=parsed, next_rule_id=next_id)


def export_engine_json(engine: Engine) -> str:
    return json.dumps(engine_to_json(engine), indent=2, sort_keys=True) + "\n"


def import_engine_json(text: str) -> Engine:
    return engine_from_json(_parse_json(text, "engine document"))


def _parse_json(text: str, where: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{where}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


# ---------------------------------------------------------------------------
# Frames and projects.
# ---------------------------------------------------------------------------

def _buttons_to_json(pressed: frozenset) -> dict:
    return {b: (b in pressed) for b in F.BUTTONS}


def frame_to_json(frame: Frame) -> dict:
    return {
        "index": frame.index,
        "input": {
            "buttons": _buttons_to_json(frame.input.pressed),
            "prevButtons": _buttons_to_json(frame.input.prev_pressed),
        },
        "objects": [
            {
                "id": o.id,
                "sprite": o.sprite.name,
                "x": o.x,
                "y": o.y,
                "vx": o.vx,
                "vy": o.vy,
                "vxUserSet": o.vx_user,
                "vyUserSet": o.vy_user,
            }
            for o in frame.objects
        ],
    }


def _input_from_json(doc: Mapping, where: str) -> InputState:
    buttons = _require(doc, "buttons", Mapping, where)
    prev = _require(doc, "prevButtons", Mapping, where)
    for mapping in (buttons, prev):
        for key, value in mapping.items():
            if key not in F.BUTTONS or not isinstance(value, bool):
                raise SchemaError(f"{where}: bad button entry {key!r}")
    return InputState.from_maps(buttons, prev)


def frame_from_json(
    doc: Mapping,
    sprites: Mapping,
    grid_width: int,
    grid_height: int,
    where: str = "frame",
) -> Frame:
    objects = []
    for i, odoc in enumerate(_require(doc, "objects", list, where)):
        owhere = f"{where}.objects[{i}]"
        sprite_name = _require(odoc, "sprite", str, owhere)
        if sprite_name not in sprites:
            raise SchemaError(f"{owhere}: undeclared sprite {sprite_name!r}")
        objects.append(
            GameObject(
                id=_int_field(odoc, "id", owhere),
                sprite=sprites[sprite_name],
                x=_int_field(odoc, "x", owhere),
                y=_int_field(odoc, "y", owhere),
                vx=_int_field(odoc, "vx", owhere) if "vx" in odoc else 0,
                vy=_int_field(odoc, "vy", owhere) if "vy" in odoc else 0,
                vx_user=bool(odoc.get("vxUserSet", False)),
                vy_user=bool(odoc.get("vyUserSet", False)),
            )
        )
    try:
        return Frame(
            index=_int_field(doc, "index", where),
            grid_width=grid_width,
            grid_height=grid_height,
            objects=tuple(objects),
            input=_input_from_json(_require(doc, "input", Mapping, where), f"{where}.input"),
        )
    except (F.MalformedFrameError, ValueError) as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def config_to_json(config: LearnerConfig, tick_rate: int) -> dict:
    return {
        "theta": config.theta,
        "maxIterations": config.max_iterations,
        "vmax": config.vmax,
        "kinematics": config.kinematics,
        "tickRate": tick_rate,
    }


def project_to_json(project: Project) -> dict:
    return {
        "schemaVersion": PROJECT_SCHEMA_VERSION,
        "name": project.name,
        "gridWidth": project.grid_width,
        "gridHeight": project.grid_height,
        "sprites": [
            {"name": s.name, "width": s.width, "height": s.height}
            for s in sorted(project.sprites, key=lambda s: s.name)
        ],
        "frames": [frame_to_json(f) for f in project.frames],
        "engine": engine_to_json(project.engine) if project.engine is not None else None,
        "config": config_to_json(project.config, project.tick_rate),
    }


def project_from_json(doc) -> Project:
    where = "project"
    version = _int_field(doc, "schemaVersion", where)
    if version != PROJECT_SCHEMA_VERSION:
        raise VersionError(f"{where}: unsupported schemaVersion {version}")
    grid_width = _int_field(doc, "gridWidth", where)
    grid_height = _int_field(doc, "gridHeight", where)
    sprites = {}
    for i, sdoc in enumerate(_require(doc, "sprites", list, where)):
        swhere = f"{where}.sprites[{i}]"
        try:
            sprite = SpriteRef(
                _require(sdoc, "name", str, swhere),
                _int_field(sdoc, "width", swhere),
                _int_field(sdoc, "height", swhere),
            )
        except ValueError as exc:
            raise SchemaError(f"{swhere}: {exc}") from exc
        sprites[sprite.name] = sprite
    frames = []
    for i, fdoc in enumerate(_require(doc, "frames", list, where)):
        frames.append(
            frame_from_json(fdoc, sprites, grid_width, grid_height, f"{where}.frames[{i}]")
        )
    for i, frame in enumerate(frames):
        if frame.index != i:
            raise SchemaError(f"{where}: frame indices must run 0..n-1 (got {frame.index} at {i})")
    engine_doc = doc.get("engine")
    cfg = doc.get("config", {})
    if not isinstance(cfg, Mapping):
        raise SchemaError(f"{where}: config must be an object")
    try:
        config = LearnerConfig(
            theta=cfg.get("theta", 0),
            max_iterations=cfg.get("maxIterations", 10),
            vmax=cfg.get("vmax", F.DEFAULT_VMAX),
            kinematics=cfg.get("kinematics", True),
        )
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"{where}.config: {exc}") from exc
    return Project(
        name=_require(doc, "name", str, where),
        grid_width=grid_width,
        grid_height=grid_height,
        sprites=tuple(sorted(sprites.values(), key=lambda s: s.name)),
        frames=tuple(frames),
        engine=engine_from_json(engine_doc, f"{where}.engine") if engine_doc is not None else None,
        config=config,
        tick_rate=cfg.get("tickRate", DEFAULT_TICK_RATE),
    )


def save_project(project: Project, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(project_to_json(project), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_project(path) -> Project:
    with open(path, "r", encoding="utf-8") as fh:
        doc = _parse_json(fh.read(), str(path))
    return project_from_json(doc)


def save_engine(engine: Engine, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(export_engine_json(engine))


def load_engine(path) -> Engine:
    with open(path, "r", encoding="utf-8") as fh:
        return import_engine_json(fh.read())


# ---------------------------------------------------------------------------
# Event log.
# ---------------------------------------------------------------------------

def make_event(kind: str, payload: Mapping = None, timestamp_ms: int = None) -> EventRecord:
    return EventRecord(
        timestamp_ms=int(time.time() * 1000) if timestamp_ms is None else timestamp_ms,
        kind=kind,
        payload=dict(payload or {}),
    )


def append_event(log_path, record: EventRecord) -> None:
    line = json.dumps(
        {"timestampMs": record.timestamp_ms, "kind": record.kind, "payload": dict(record.payload)},
        sort_keys=True,
    )
    with open(log_path, "a", encoding="utf-8") as fh:
        fh.write(line + "\n")


def read_events(log_path) -> list:
    records = []
    with open(log_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            doc = _parse_json(line, f"{log_path}:{lineno}")
            records.append(
                EventRecord(
                    timestamp_ms=_int_field(doc, "timestampMs", f"{log_path}:{lineno}"),
                    kind=_require(doc, "kind", str, f"{log_path}:{lineno}"),
                    payload=_require(doc, "payload", Mapping, f"{log_path}:{lineno}"),
                )
            )
    return records
