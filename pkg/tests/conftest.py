import numpy as np
import pytest

from qaqc.seeding import generator
from qaqc.verify import random_pair, random_sequence  # noqa: F401 (shared corpus helpers)


@pytest.fixture
def rng():
    return generator(20260809)


def assert_phase_close(a, b, tol=1e-9):
    from qaqc.simulator import global_phase_distance

    dist = global_phase_distance(a, b)
    assert dist < tol, f"phase-aligned distance {dist:.3e} exceeds {tol:.1e}"


def kron_chain(*mats):
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out
