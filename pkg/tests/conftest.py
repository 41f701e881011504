import pytest

from rulesmith.demos import BIRD, PIPE, flappy_frames, sokoban_frames
from rulesmith.facts import Frame, GameObject, InputState, extract_facts
from rulesmith.learning import learn


@pytest.fixture(scope="session")
def flappy_engine():
    result = learn(flappy_frames())
    assert result.converged
    return result.engine


@pytest.fixture(scope="session")
def sokoban_engine():
    result = learn(sokoban_frames())
    assert result.converged
    return result.engine


def appendix_scene(space: bool = True) -> Frame:
    """The bird/longblock frame the hand-built jump rule was written against."""
    return Frame(
        index=0,
        objects=(
            GameObject(0, BIRD, 2, 3, 0, -1),
            GameObject(1, PIPE, 9, 0, -1, 0),
        ),
        input=InputState.make(("space",) if space else ()),
    )


def appendix_scene_facts(space: bool = True) -> frozenset:
    return extract_facts(appendix_scene(space), {0, 1})
