import pytest

from src.instance import Instance


@pytest.fixture
def inst_a() -> Instance:
    """N=3, M=0, client i holds only packet i-1."""
    return Instance.from_lists([[0], [1], [2]], n_unreliable=0)


@pytest.fixture
def inst_b() -> Instance:
    """Same sets as inst_a with one unreliable client."""
    return Instance.from_lists([[0], [1], [2]], n_unreliable=1)


@pytest.fixture
def inst_c() -> Instance:
    """N=4, M=1 ring: client i holds packets i-1 and i mod 4."""
    return Instance.from_lists([[0, 1], [1, 2], [2, 3], [3, 0]], n_unreliable=1)


@pytest.fixture
def inst_full() -> Instance:
    """Every client already holds everything."""
    return Instance.from_lists([[0, 1, 2]] * 4, n_unreliable=1)
