import pytest

from healthmon.scenario import parse_scenario


@pytest.fixture
def make_scenario():
    """Parse scenario YAML text through the normal validation path."""

    def _make(text: str, name: str = "<test>"):
        return parse_scenario(text, name=name)

    return _make
