"""Rules, engines, one-step fact prediction, and the frame-distance metric.

A rule is a guarded rewrite of a single fact slot: when every condition fact
holds and the pre-effect fact is present, the pre-effect is replaced by the
post-effect on the next frame.  An engine is an ordered rule sequence; order
is creation order and breaks conflicts deterministically (first rule wins).
"""

from __future__ import annotations

from dataclasses import dataclass

from . import facts as F
from .facts import (
    ANIMATION,
    EMPTY,
    POSITION_X,
    POSITION_Y,
    RELATIONSHIP_KINDS,
    VELOCITY_X,
    VELOCITY_Y,
    Fact,
    clamp,
    slot,
)


@dataclass(frozen=True)
class Rule:
    """pre-effect -> post-effect, guarded by a condition fact set."""

    id: int
    pre: Fact
    post: Fact
    conditions: frozenset

    def __post_init__(self):
        if slot(self.pre) != slot(self.post):
            raise ValueError(
                f"rule {self.id}: pre and post must rewrite the same slot "
                f"({slot(self.pre)} vs {slot(self.post)})"
            )
        if self.pre == self.post:
            raise ValueError(f"rule {self.id}: pre and post effects are identical")
        if not self.conditions:
            raise ValueError(f"rule {self.id}: conditions must be nonempty")


@dataclass(frozen=True)
class Engine:
    """An ordered sequence of rules plus the id counter for fresh rules."""

    rules: tuple = ()
    next_rule_id: int = 0

    def rule_by_id(self, rule_id: int):
        for rule in self.rules:
            if rule.id == rule_id:
                return rule
        return None


@dataclass(frozen=True)
class PredictionResult:
    facts: frozenset
    fired_rule_ids: tuple = ()
    distance_to_actual: float = None


def rule_fires(rule: Rule, fact_set: frozenset) -> bool:
    """True iff every condition holds and the pre-effect fact is present."""
    return rule.pre in fact_set and rule.conditions <= fact_set


def _reconcile_objects(fact_set: set) -> None:
    """Keep per-object facts consistent after appear/disappear rewrites.

    A fired disappear rule leaves stale velocity/position facts behind; drop
    them.  A fired appear rule introduces only the animation fact; default the
    missing velocity/position facts to zero so the set stays slot-complete.
    """
    empty_ids = {f.subject for f in fact_set if f.kind == EMPTY}
    anim_ids = {f.subject for f in fact_set if f.kind == ANIMATION}
    if empty_ids:
        for f in list(fact_set):
            if f.kind in (VELOCITY_X, VELOCITY_Y, POSITION_X, POSITION_Y):
                if f.subject in empty_ids:
                    fact_set.discard(f)
            elif f.kind in RELATIONSHIP_KINDS:
                a, b = f.subject
                if a in empty_ids or b in empty_ids:
                    fact_set.discard(f)
    for obj_id in anim_ids:
        slots_present = {(f.kind, f.subject) for f in fact_set if f.subject == obj_id}
        for kind, default in (
            (VELOCITY_X, 0),
            (VELOCITY_Y, 0),
            (POSITION_X, 0),
            (POSITION_Y, 0),
        ):
            if (kind, obj_id) not in slots_present:
                fact_set.add(Fact(kind, obj_id, default))


def predict_facts(
    engine: Engine,
    fact_set: frozenset,
    kinematics: bool = True,
    grid_width: int = F.DEFAULT_GRID_WIDTH,
    grid_height: int = F.DEFAULT_GRID_HEIGHT,
) -> PredictionResult:
    """Predict the next fact set.

    Rules are scanned in engine order; a rule fires when ``rule_fires`` holds
    and no earlier-fired rule already rewrote the same slot.  With kinematics
    on, every surviving object then moves by its post-effect velocity (clamped
    to the grid) and relationship facts are recomputed from the resulting
    positions.  Positions written by a fired rule are authoritative for the
    tick: velocity integration skips those axes, which is what lets an
    explicit position rule express a teleport.
    """
    fired = []
    taken = set()
    for rule in engine.rules:
        s = slot(rule.pre)
        if s in taken:
            continue
        if rule_fires(rule, fact_set):
            fired.append(rule)
            taken.add(s)

    out = set(fact_set)
    pinned = set()
    for rule in fired:
        out.discard(rule.pre)
        out.add(rule.post)
        if rule.post.kind in (POSITION_X, POSITION_Y):
            pinned.add((rule.post.kind, rule.post.subject))
    _reconcile_objects(out)

    if kinematics:
        anims = {f.subject for f in out if f.kind == ANIMATION}
        vxs = {f.subject: f.value for f in out if f.kind == VELOCITY_X}
        vys = {f.subject: f.value for f in out if f.kind == VELOCITY_Y}
        for f in list(out):
            if f.kind == POSITION_X and f.subject in anims:
                if (POSITION_X, f.subject) not in pinned:
                    out.discard(f)
                    out.add(F.position_x(f.subject, clamp(f.value + vxs.get(f.subject, 0), 0, grid_width - 1)))
            elif f.kind == POSITION_Y and f.subject in anims:
                if (POSITION_Y, f.subject) not in pinned:
                    out.discard(f)
                    out.add(F.position_y(f.subject, clamp(f.value + vys.get(f.subject, 0), 0, grid_height - 1)))
        out = {f for f in out if f.kind not in RELATIONSHIP_KINDS}
        out |= F.relationship_facts(F.objects_from_facts(frozenset(out)))

    return PredictionResult(frozenset(out), tuple(r.id for r in fired))


def frame_distance(predicted: frozenset, actual: frozenset) -> tuple:
    """Fact-set distance: (raw symmetric-difference count, normalized in [0,1])."""
    raw = len(predicted ^ actual)
    denom = len(predicted) + len(actual)
    return raw, (raw / denom if denom else 0.0)
