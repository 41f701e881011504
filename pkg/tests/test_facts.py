import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rulesmith.errors import MalformedFrameError
from rulesmith.facts import (
    BUTTON_ORDER,
    RELATIONSHIP_KINDS,
    VARIABLE,
    Frame,
    GameObject,
    InputState,
    SpriteRef,
    derive_velocities,
    empty,
    extract_facts,
    in_contact,
    position_x,
    position_y,
    relationship_x,
    relationship_y,
    slot,
    variable,
    velocity_x,
    velocity_y,
    animation,
)

from conftest import appendix_scene_facts

DOT = SpriteRef("dot", 1, 1)


def _seq(positions, width=40, user=None):
    """Frames with one object walking through the given x positions."""
    frames = []
    for i, x in enumerate(positions):
        kwargs = {}
        if user and i in user:
            kwargs = {"vx": user[i], "vx_user": True}
        frames.append(
            Frame(index=i, grid_width=width, grid_height=9,
                  objects=(GameObject(0, DOT, x, 4, **kwargs),))
        )
    return frames


class TestDeriveVelocities:
    def test_unit_displacement(self):
        out = derive_velocities(_seq([3, 4]))
        assert out[1].objects[0].vx == 1

    def test_teleport_delta_enumeration(self):
        # Oracle: hand-apply the rule for every delta in -11..11, with a prior
        # velocity of +2 established by the first hop.
        for delta in range(-11, 12):
            frames = _seq([14, 16, 16 + delta])
            out = derive_velocities(frames, vmax=3)
            expected = delta if abs(delta) <= 3 else 2
            assert out[2].objects[0].vx == expected, f"delta={delta}"

    def test_teleport_from_rest_keeps_rest(self):
        out = derive_velocities(_seq([0, 11]), vmax=3)
        assert out[1].objects[0].vx == 0

    def test_single_frame_all_zero(self):
        out = derive_velocities(_seq([7]))
        assert out == _seq([7])
        assert out[0].objects[0].vx == 0

    def test_user_set_velocity_kept(self):
        frames = _seq([3, 4], user={1: 9})
        out = derive_velocities(frames)
        assert out[1].objects[0].vx == 9

    def test_new_object_zero_velocity(self):
        f0 = Frame(index=0, objects=(GameObject(0, DOT, 1, 1),))
        f1 = Frame(index=1, objects=(GameObject(0, DOT, 2, 1), GameObject(1, DOT, 5, 5)))
        out = derive_velocities([f0, f1])
        assert out[1].object_by_id(1).vx == 0
        assert out[1].object_by_id(0).vx == 1

    def test_duplicate_id_rejected(self):
        with pytest.raises(MalformedFrameError):
            Frame(index=0, objects=(GameObject(0, DOT, 1, 1), GameObject(0, DOT, 2, 2)))

    def test_idempotent(self):
        frames = _seq([3, 4, 6, 20, 21])
        once = derive_velocities(frames)
        twice = derive_velocities(once)
        assert once == twice


class TestExtractFacts:
    def test_flappy_scene_facts(self):
        facts = appendix_scene_facts(space=True)
        for expected in (
            velocity_y(0, -1),
            velocity_x(1, -1),
            animation(0, "bird", 1, 1),
            animation(1, "longblock", 1, 4),
            variable("space", True),
            variable("upPrev", False),
        ):
            assert expected in facts
        assert not any(f.kind in RELATIONSHIP_KINDS for f in facts)

    def test_empty_frame_universe(self):
        frame = Frame(index=0)
        facts = extract_facts(frame, {0})
        variables = {f for f in facts if f.kind == VARIABLE}
        assert facts == variables | {empty(0)}
        assert len(variables) == 10
        assert all(f.value is False for f in variables)

    def test_adjacent_pair_relationships(self):
        frame = Frame(
            index=0,
            objects=(GameObject(0, DOT, 4, 4), GameObject(1, DOT, 5, 4)),
        )
        facts = extract_facts(frame, {0, 1})
        assert relationship_x(0, 1, -1) in facts
        assert relationship_x(1, 0, 1) in facts
        assert relationship_y(0, 1, 0) in facts
        assert relationship_y(1, 0, 0) in facts

    def test_contact_matches_bruteforce(self):
        # Oracle: minimum Chebyshev distance over all covered cell pairs.
        tall = SpriteRef("tall", 1, 4)
        for ax in range(0, 12):
            for ay in range(0, 6):
                a = GameObject(0, tall, ax, ay)
                b = GameObject(1, DOT, 5, 4)
                cells_a = [(ax, ay + dy) for dy in range(4)]
                expected = min(
                    max(abs(ca[0] - 5), abs(ca[1] - 4)) for ca in cells_a
                ) <= 1
                assert in_contact(a, b) == expected, (ax, ay)

    def test_purity(self):
        frame1 = appendix_scene_facts()
        frame2 = appendix_scene_facts()
        assert frame1 == frame2

    def test_cardinality_formula(self):
        frame = Frame(
            index=0,
            objects=(GameObject(0, DOT, 4, 4), GameObject(1, DOT, 5, 4)),
        )
        facts = extract_facts(frame, {0, 1, 7, 9})
        relationships = [f for f in facts if f.kind in RELATIONSHIP_KINDS]
        assert len(facts) == 5 * 2 + 10 + 2 + len(relationships)

    def test_relationships_mirrored(self):
        frame = Frame(
            index=0,
            objects=(GameObject(0, DOT, 4, 4), GameObject(1, DOT, 5, 5), GameObject(2, DOT, 5, 3)),
        )
        facts = extract_facts(frame, {0, 1, 2})
        rels = {(f.kind, f.subject): f.value for f in facts if f.kind in RELATIONSHIP_KINDS}
        for (kind, (a, b)), offset in rels.items():
            assert rels[(kind, (b, a))] == -offset


# Random frames for the structural properties.
_objects = st.lists(
    st.tuples(st.integers(0, 5), st.integers(0, 11), st.integers(0, 8)),
    max_size=4,
    unique_by=lambda t: t[0],
)
_pressed = st.sets(st.sampled_from(("space", "up", "down", "left", "right")), max_size=5)


@st.composite
def frames(draw):
    objs = tuple(
        GameObject(oid, DOT, x, y) for oid, x, y in draw(_objects)
    )
    return Frame(index=0, objects=objs,
                 input=InputState.make(draw(_pressed), draw(_pressed)))


@given(frames())
@settings(max_examples=200, deadline=None)
def test_slot_uniqueness(frame):
    facts = extract_facts(frame, {0, 1, 2, 3, 4, 5})
    slots = [slot(f) for f in facts]
    assert len(slots) == len(set(slots))


@given(frames())
@settings(max_examples=100, deadline=None)
def test_input_variables_round_trip(frame):
    facts = extract_facts(frame, set())
    names = sorted(f.subject for f in facts if f.kind == VARIABLE)
    assert names == sorted(BUTTON_ORDER)
