import numpy as np
import pytest

from elastocal.design import ExperimentPlan, PlanEntry
from elastocal.kinematics import kr270_like
from elastocal.stiffness import default_compensator

FORCE_DIRECTIONS = np.array(
    [
        [0.0, 0.0, -1.0],
        [0.6, 0.0, -0.8],
        [-0.6, 0.0, -0.8],
        [0.0, 0.6, -0.8],
        [0.0, -0.6, -0.8],
        [0.7, 0.7, -0.14],
    ]
)
FORCE_DIRECTIONS /= np.linalg.norm(FORCE_DIRECTIONS, axis=1)[:, None]


@pytest.fixture(scope="session")
def kr_model():
    return kr270_like()


@pytest.fixture(scope="session")
def comp():
    return default_compensator()


def make_plan(rng, q2_groups, n, magnitude=2500.0):
    """Scattered feasible plan with round-robin q2 groups and mixed forces."""
    q2_groups = np.asarray(q2_groups, dtype=float)
    entries = []
    for i in range(n):
        q = np.deg2rad(
            [
                rng.uniform(-40, 40),
                0.0,
                rng.uniform(-30, 60),
                rng.uniform(-90, 90),
                rng.uniform(-60, 60),
                rng.uniform(-90, 90),
            ]
        )
        q[1] = q2_groups[i % q2_groups.size]
        d = FORCE_DIRECTIONS[i % len(FORCE_DIRECTIONS)]
        entries.append(PlanEntry(q, np.concatenate([magnitude * d, np.zeros(3)])))
    return ExperimentPlan(entries)


@pytest.fixture
def ident_plan():
    rng = np.random.default_rng(1234)
    return make_plan(rng, np.deg2rad([-10, -40, -70, -100, -130]), 15)


@pytest.fixture
def validation_plan():
    rng = np.random.default_rng(4321)
    return make_plan(rng, np.deg2rad([-25, -55, -85, -115]), 10)
