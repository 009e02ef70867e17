"""Measurement-pose selection for the elastostatic calibration.

The plan quality measure is the test-pose criterion: the trace of the
test-pose observation block sandwiched with the per-q2-group inverse
normal matrices of the plan. Smaller is better; it scales like the
expected squared test-pose position error (m^2) up to the noise variance.
The search is a seeded multi-start greedy exchange over a discrete
candidate grid.
"""

import dataclasses
import math
from typing import NamedTuple

import numpy as np

from .errors import InfeasiblePlanError
from .identification import group_q2, observation_matrix, Q2_GROUP_TOL
from .kinematics import fk_jacobians
from .stiffness import COMP_JOINT

INFEASIBLE = math.inf


class PlanEntry(NamedTuple):
    q: np.ndarray
    wrench: np.ndarray


@dataclasses.dataclass(frozen=True)
class TestPose:
    """Machining-representative configuration and load (q0, F0)."""

    __test__ = False  # not a pytest class, despite the name

    q: np.ndarray
    wrench: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float).reshape(-1))
        object.__setattr__(
            self, "wrench", np.asarray(self.wrench, dtype=float).reshape(6)
        )
        if not np.any(self.wrench):
            raise InfeasiblePlanError("test pose wrench must be nonzero")


@dataclasses.dataclass
class ExperimentPlan:
    """Ordered list of (q, wrench) measurement entries."""

    entries: list
    criterion: float = None

    def __post_init__(self):
        self.entries = [
            PlanEntry(
                np.asarray(q, dtype=float).reshape(-1),
                np.asarray(w, dtype=float).reshape(6),
            )
            for q, w in self.entries
        ]
        if not self.entries:
            raise InfeasiblePlanError("plan must contain at least one entry")

    @property
    def m(self):
        return len(self.entries)

    def grouping(self, tol=Q2_GROUP_TOL):
        """(group_ids, group_values) of the induced q2 groups."""
        if self.entries[0].q.size <= COMP_JOINT:
            return np.zeros(self.m, dtype=int), np.array([np.nan])
        return group_q2([e.q[COMP_JOINT] for e in self.entries], tol)


def _stacked_block(model, q, wrench):
    """Position-row observation block of one entry, stacked over markers."""
    return observation_matrix(model, q, wrench).reshape(-1, model.n_joints)


def _group_term(S, A0):
    """trace(A0 S^-1 A0^T) or the infeasible sentinel."""
    try:
        X = np.linalg.solve(S, A0.T)
    except np.linalg.LinAlgError:
        return INFEASIBLE
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > 1e12:
        return INFEASIBLE
    val = float(np.einsum("ij,ji->", A0, X))
    return val if val >= 0 else INFEASIBLE


def plan_criterion(plan, test, model, comp=None, grouping_tol=Q2_GROUP_TOL):
    """Test-pose criterion of a plan; +inf when any group is singular.

    The blocks use the serial 6-parameter structure; the joint-2
    regrouping makes the criterion separate into one term per q2 group.
    The compensator model does not enter the regressor and is accepted
    only for interface symmetry.
    """
    A0 = _stacked_block(model, test.q, test.wrench)
    group_ids, group_values = plan.grouping(grouping_tol)
    total = 0.0
    n = model.n_joints
    for g in range(group_values.size):
        S = np.zeros((n, n))
        for i, entry in enumerate(plan.entries):
            if group_ids[i] == g:
                B = _stacked_block(model, entry.q, entry.wrench)
                S += B.T @ B
        term = _group_term(S, A0)
        if term == INFEASIBLE:
            return INFEASIBLE
        total += term
    return total


@dataclasses.dataclass(frozen=True)
class SearchConfig:
    restarts: int = 16
    seed: int = 0
    max_passes: int = 50


DEFAULT_FORCE_DIRECTIONS = np.array(
    [
        [0.0, 0.0, -1.0],
        [0.6, 0.0, -0.8],
        [-0.6, 0.0, -0.8],
        [0.0, 0.6, -0.8],
        [0.0, -0.6, -0.8],
        [0.7, 0.7, -0.14],
        [-0.7, 0.7, -0.14],
    ]
)
DEFAULT_FORCE_DIRECTIONS /= np.linalg.norm(DEFAULT_FORCE_DIRECTIONS, axis=1)[:, None]


def build_candidate_grid(
    model, n_candidates, q2_values=None, force_magnitudes=(2000.0,),
    force_directions=None, seed=0, margin=0.05, singularity_floor=1e-6,
):
    """Seeded random grid of feasible (q, wrench) candidates.

    Joint values are drawn inside the limits (shrunk by the margin
    fraction); joint 2 snaps to one of q2_values so candidate plans induce
    proper q2 groups. Forces are unit directions from a fixed set scaled
    by a configured magnitude, matching how loads are rigged in practice.
    Near-singular configurations are rejected.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, 77]))
    if force_directions is None:
        force_directions = DEFAULT_FORCE_DIRECTIONS
    force_directions = np.asarray(force_directions, dtype=float)
    lims = model.joint_limits
    span = lims[:, 1] - lims[:, 0]
    lo = lims[:, 0] + margin * span
    hi = lims[:, 1] - margin * span
    if q2_values is None and model.n_joints > COMP_JOINT:
        q2_values = np.linspace(
            lo[COMP_JOINT], hi[COMP_JOINT], 5
        )
    entries = []
    tries = 0
    while len(entries) < n_candidates and tries < 100 * n_candidates:
        tries += 1
        q = lo + rng.random(model.n_joints) * (hi - lo)
        if q2_values is not None and model.n_joints > COMP_JOINT:
            q[COMP_JOINT] = q2_values[rng.integers(len(q2_values))]
        _, _, jac = fk_jacobians(model, q)
        sv = np.linalg.svd(jac[0], compute_uv=False)
        if sv[-1] < singularity_floor * sv[0]:
            continue
        d = force_directions[rng.integers(len(force_directions))]
        mag = force_magnitudes[rng.integers(len(force_magnitudes))]
        entries.append(PlanEntry(q, np.concatenate([mag * d, np.zeros(3)])))
    if len(entries) < n_candidates:
        raise InfeasiblePlanError("could not sample enough feasible candidates")
    return entries


class _CriterionEvaluator:
    """Incremental criterion evaluation over a fixed candidate grid."""

    def __init__(self, grid, test, model, grouping_tol=Q2_GROUP_TOL):
        n = model.n_joints
        self.n = n
        self.A0 = _stacked_block(model, test.q, test.wrench)
        blocks = [_stacked_block(model, e.q, e.wrench) for e in grid]
        self.G = np.array([B.T @ B for B in blocks])
        if model.n_joints > COMP_JOINT:
            q2s = [e.q[COMP_JOINT] for e in grid]
            self.group_of, self.group_values = group_q2(q2s, grouping_tol)
        else:
            self.group_of = np.zeros(len(grid), dtype=int)
            self.group_values = np.array([np.nan])
        self.n_groups = self.group_values.size

    def new_state(self, indices):
        S = np.zeros((self.n_groups, self.n, self.n))
        counts = np.zeros(self.n_groups, dtype=int)
        for c in indices:
            g = self.group_of[c]
            S[g] += self.G[c]
            counts[g] += 1
        terms = np.array(
            [
                _group_term(S[g], self.A0) if counts[g] else 0.0
                for g in range(self.n_groups)
            ]
        )
        return S, counts, terms

    def total(self, counts, terms):
        if not np.any(counts):
            return INFEASIBLE
        if np.any(~np.isfinite(terms[counts > 0])):
            return INFEASIBLE
        return float(np.sum(terms[counts > 0]))

    def swap_value(self, S, counts, terms, c_out, c_in):
        """Criterion after replacing one entry, without mutating state."""
        g_out, g_in = self.group_of[c_out], self.group_of[c_in]
        touched = {g_out, g_in}
        new_terms = terms.copy()
        new_counts = counts.copy()
        new_counts[g_out] -= 1
        new_counts[g_in] += 1
        for g in touched:
            Sg = S[g].copy()
            if g == g_out:
                Sg -= self.G[c_out]
            if g == g_in:
                Sg += self.G[c_in]
            new_terms[g] = _group_term(Sg, self.A0) if new_counts[g] else 0.0
        return self.total(new_counts, new_terms), new_terms, new_counts

    def apply_swap(self, S, counts, terms, c_out, c_in, new_terms, new_counts):
        S[self.group_of[c_out]] -= self.G[c_out]
        S[self.group_of[c_in]] += self.G[c_in]
        counts[:] = new_counts
        terms[:] = new_terms


def optimize_plan(candidate_grid, m, test, model, comp=None, search=None,
                  grouping_tol=Q2_GROUP_TOL):
    """Multi-start greedy exchange search for a low-criterion plan.

    Each restart draws a random m-multiset from the grid and repeatedly
    swaps single entries for the best grid alternative until no swap
    improves the criterion. Deterministic for a given SearchConfig.seed.
    Returns an ExperimentPlan with its criterion value attached.
    """
    grid = list(candidate_grid)
    if not grid:
        raise InfeasiblePlanError("empty candidate grid")
    if m < 1:
        raise InfeasiblePlanError("plan size must be >= 1")
    search = search or SearchConfig()
    ev = _CriterionEvaluator(grid, test, model, grouping_tol)

    best_value = INFEASIBLE
    best_indices = None
    for restart in range(search.restarts):
        rng = np.random.default_rng(
            np.random.SeedSequence([int(search.seed) & 0xFFFFFFFF, 101, restart])
        )
        indices = list(rng.integers(0, len(grid), size=m))
        S, counts, terms = ev.new_state(indices)
        value = ev.total(counts, terms)
        for _ in range(search.max_passes):
            improved = False
            for pos in range(m):
                c_out = indices[pos]
                best_local = (value, None)
                for c_in in range(len(grid)):
                    if c_in == c_out:
                        continue
                    cand, new_terms, new_counts = ev.swap_value(
                        S, counts, terms, c_out, c_in
                    )
                    if cand < best_local[0] - 1e-15 * max(1.0, abs(best_local[0])):
                        best_local = (cand, (c_in, new_terms, new_counts))
                if best_local[1] is not None:
                    c_in, new_terms, new_counts = best_local[1]
                    ev.apply_swap(S, counts, terms, c_out, c_in, new_terms, new_counts)
                    indices[pos] = c_in
                    value = best_local[0]
                    improved = True
            if not improved:
                break
        if value < best_value:
            best_value = value
            best_indices = sorted(indices)

    if best_indices is None or not math.isfinite(best_value):
        raise InfeasiblePlanError("no feasible plan found on the candidate grid")
    plan = ExperimentPlan([grid[c] for c in best_indices], criterion=best_value)
    return plan


def random_plan(candidate_grid, m, rng):
    """Uniform m-subset of the grid (no replacement), as a baseline."""
    idx = rng.choice(len(candidate_grid), size=m, replace=False)
    return ExperimentPlan([candidate_grid[int(c)] for c in sorted(idx)])
