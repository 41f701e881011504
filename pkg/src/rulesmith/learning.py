"""Iterative rule-engine search over a demonstrated frame sequence.

The learner walks the demonstration transition by transition.  While a
transition's prediction is outside the raw-distance threshold, it generates
neighbor engines (add a rule for an unmatched fact pair, generalize an
existing rule's conditions by intersection, or remove a rule), keeps the best
strict improvement, and restarts the walk from frame 0.  Each failing
transition gets at most ``max_iterations`` neighbor searches; when the budget
runs out the learner keeps the best engine seen and moves on.

Button facts are exogenous: before predicting transition t -> t+1 the source
fact set's variable facts are replaced with frame t+1's input, exactly as the
live runtime injects real key state each tick.  Learned conditions therefore
capture the input that accompanied the change (a jump rule conditions on the
space bar being down), and no engine is ever asked to predict a key press.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import facts as F
from .engine import Engine, Rule, frame_distance, predict_facts
from .errors import InsufficientDataError, RuleNotFoundError
from .facts import ANIMATION, Fact, empty, slot, slot_sort_key


@dataclass(frozen=True)
class LearnerConfig:
    theta: int = 0
    max_iterations: int = 10
    vmax: int = F.DEFAULT_VMAX
    kinematics: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.theta < 0:
            raise ValueError("theta must be >= 0")


@dataclass(frozen=True)
class UnmatchedPair:
    """A slot whose fact differs between the predicted and the actual frame."""

    have: Fact
    want: Fact


@dataclass(frozen=True)
class LearnResult:
    engine: Engine
    total_error: float
    converged: bool


@dataclass(frozen=True)
class Demonstration:
    """Frames prepared for learning: derived velocities, extracted fact sets."""

    fact_frames: tuple
    inputs: tuple
    grid_width: int
    grid_height: int

    def __len__(self):
        return len(self.fact_frames)

    def source_facts(self, t: int) -> frozenset:
        """Fact set used to predict transition t -> t+1 (input of t+1 injected)."""
        return F.replace_variable_facts(self.fact_frames[t], self.inputs[t + 1])


def prepare_demonstration(frames, config: LearnerConfig = LearnerConfig()) -> Demonstration:
    derived = F.derive_velocities(frames, config.vmax)
    universe = F.universe_of(derived)
    return Demonstration(
        fact_frames=tuple(F.extract_facts(f, universe) for f in derived),
        inputs=tuple(f.input for f in derived),
        grid_width=derived[0].grid_width,
        grid_height=derived[0].grid_height,
    )


def unmatched_pairs(predicted: frozenset, actual: frozenset) -> list:
    """Differing slots as (have, want) pairs, in deterministic slot order.

    Only slots that can anchor a valid rule are emitted: slots present on both
    sides, plus animation slots where the missing side is synthesized as an
    empty fact (appear/disappear).  A velocity/position/relationship fact with
    no counterpart slot on the other side has no rule shape and is skipped --
    those facts follow from the object's animation slot and the kinematics.
    """
    pred_by_slot = {slot(f): f for f in predicted}
    act_by_slot = {slot(f): f for f in actual}
    pairs = []
    for s in set(pred_by_slot) | set(act_by_slot):
        have = pred_by_slot.get(s)
        want = act_by_slot.get(s)
        if have is None or want is None:
            if s[0] != ANIMATION:
                continue
            have = have if have is not None else empty(s[1])
            want = want if want is not None else empty(s[1])
        if have == want:
            continue
        pairs.append(UnmatchedPair(have, want))
    pairs.sort(key=lambda p: slot_sort_key(slot(p.have)))
    return pairs


def add_rule(engine: Engine, current_facts: frozenset, pair: UnmatchedPair) -> Engine:
    """New engine with one extra rule: pair.have -> pair.want guarded by the whole frame."""
    rule = Rule(
        id=engine.next_rule_id,
        pre=pair.have,
        post=pair.want,
        conditions=frozenset(current_facts),
    )
    return Engine(rules=engine.rules + (rule,), next_rule_id=engine.next_rule_id + 1)


def modify_rule(engine: Engine, rule_id: int, current_facts: frozenset):
    """Generalize a rule: conditions become their intersection with the frame.

    Returns the modified engine, or None when the intersection is empty (the
    operator yields no neighbor rather than an unguarded rule).
    """
    rule = engine.rule_by_id(rule_id)
    if rule is None:
        raise RuleNotFoundError(f"no rule with id {rule_id}")
    narrowed = rule.conditions & frozenset(current_facts)
    if not narrowed:
        return None
    new_rules = tuple(
        Rule(r.id, r.pre, r.post, narrowed) if r.id == rule_id else r
        for r in engine.rules
    )
    return Engine(rules=new_rules, next_rule_id=engine.next_rule_id)


def remove_rule(engine: Engine, rule_id: int) -> Engine:
    if engine.rule_by_id(rule_id) is None:
        raise RuleNotFoundError(f"no rule with id {rule_id}")
    return Engine(
        rules=tuple(r for r in engine.rules if r.id != rule_id),
        next_rule_id=engine.next_rule_id,
    )


def score_engine(engine: Engine, demo: Demonstration, upto_index: int, config: LearnerConfig) -> float:
    """Summed normalized distance over transitions 0..upto_index-1."""
    total = 0.0
    for t in range(upto_index):
        pred = predict_facts(
            engine,
            demo.source_facts(t),
            kinematics=config.kinematics,
            grid_width=demo.grid_width,
            grid_height=demo.grid_height,
        )
        total += frame_distance(pred.facts, demo.fact_frames[t + 1])[1]
    return total


def engine_search(engine: Engine, demo: Demonstration, failing_index: int, config: LearnerConfig):
    """One neighbor-search step on a failing transition.

    Neighbors: one add per unmatched pair, one modify per rule whose pre-effect
    slot is implicated in the failure, one remove per rule.  Returns the best
    neighbor and True when it strictly improves the prefix score; otherwise
    the unchanged engine and False.  Ties keep the earliest-generated neighbor.
    """
    source = demo.source_facts(failing_index)
    actual = demo.fact_frames[failing_index + 1]
    pred = predict_facts(
        engine, source, config.kinematics, demo.grid_width, demo.grid_height
    )
    pairs = unmatched_pairs(pred.facts, actual)
    pair_slots = {slot(p.have) for p in pairs}

    neighbors = []
    for pair in pairs:
        neighbors.append(add_rule(engine, source, pair))
    for rule in engine.rules:
        if slot(rule.pre) in pair_slots:
            modified = modify_rule(engine, rule.id, source)
            if modified is not None:
                neighbors.append(modified)
    for rule in engine.rules:
        neighbors.append(remove_rule(engine, rule.id))

    upto = failing_index + 1
    best = engine
    best_score = score_engine(engine, demo, upto, config)
    updated = False
    for neighbor in neighbors:
        s = score_engine(neighbor, demo, upto, config)
        if s < best_score:
            best, best_score, updated = neighbor, s, True
    return best, updated


def learn(frames, config: LearnerConfig = LearnerConfig(), initial_engine: Engine = None, on_search=None) -> LearnResult:
    """Learn an engine that reproduces the demonstration within the threshold.

    Passing a previously learned engine as ``initial_engine`` supports
    incremental relearning after frame edits.  ``on_search`` (when given) is
    called with the failing transition index before every neighbor search;
    tests use it to check the iteration budget.
    """
    if len(frames) < 2:
        raise InsufficientDataError("learning needs at least 2 frames")
    demo = prepare_demonstration(frames, config)
    engine = initial_engine if initial_engine is not None else Engine()
    adopted = [engine]

    n = len(demo)
    t = 0
    current = demo.fact_frames[0]
    iterations = 0
    clean = True
    while t < n - 1:
        source = F.replace_variable_facts(current, demo.inputs[t + 1])
        pred = predict_facts(
            engine, source, config.kinematics, demo.grid_width, demo.grid_height
        )
        raw, _ = frame_distance(pred.facts, demo.fact_frames[t + 1])
        if raw <= config.theta:
            current = pred.facts
            t += 1
            iterations = 0
            continue
        if iterations >= config.max_iterations:
            # Budget spent: give up on this transition and resync to the
            # demonstrated frame so later transitions learn from real states.
            clean = False
            current = demo.fact_frames[t + 1]
            t += 1
            iterations = 0
            continue
        if on_search is not None:
            on_search(t)
        candidate, updated = engine_search(engine, demo, t, config)
        iterations += 1
        if updated:
            engine = candidate
            adopted.append(engine)
            t = 0
            current = demo.fact_frames[0]
            iterations = 0
            clean = True

    if clean:
        return LearnResult(engine, score_engine(engine, demo, n - 1, config), True)
    # Not converged: return the closest engine adopted at any point.
    best_engine, best_score = adopted[0], None
    for cand in adopted:
        s = score_engine(cand, demo, n - 1, config)
        if best_score is None or s < best_score:
            best_engine, best_score = cand, s
    return LearnResult(best_engine, best_score, False)
