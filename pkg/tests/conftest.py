import pytest

from crb.lexicon import load_lexicon


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon()
