#!/usr/bin/env python3
# ======================================================================
# Consensus/ConsensusOps.py
#   • MeasurementPlan – one projective measurement per agent, label 0 = ⊥
#   • build_consensus_measurements / computational_plan / plan files
#   • joint_outcome_distribution – exact Born table by prefix-tree walk
#   • run_trials – seeded sequential sampling with fail-stop agents
#   • necessity_probe – random rank-split plans on supports
#   No messages are ever exchanged; drop probability is recorded only.
# ======================================================================

from __future__ import annotations

import itertools
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from Consensus.ConsensusParams import (
    PROBE_MAX_RELABELINGS,
    PROBE_OUTCOMES,
    PROBE_SAMPLES,
    SIM_SEED,
    TRIALS,
    WORKERS,
)
from Schmidt.Certificates import (
    SchmidtProjectorSet,
    refine_to_support,
    verify_schmidt_projectors,
)
from Schmidt.SchmidtOps import analyze
from Tensors.StateFiles import decode_matrix, encode_matrix
from Tensors.TensorOps import (
    Projector,
    StateVector,
    apply_local,
    haar_unitary,
    local_state,
    support_projector,
    support_rank,
)
from Tensors.TensorParams import TOLERANCES, Tolerances

Outcome = Tuple[int, ...]
OutcomeTable = Dict[Outcome, float]

BOTTOM = 0


def _key(outcome: Outcome) -> str:
    return ",".join(str(o) for o in outcome)


# ────────────────────────────────────────────────────────────────
# 1) plans
# ----------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class MeasurementPlan:
    """outcomes[i][0] is agent i's ⊥ projector, outcomes[i][j] its label-j projector."""

    dims: Tuple[int, ...]
    outcomes: Tuple[Tuple[Projector, ...], ...]
    certified: bool = False
    tolerances: Tolerances = field(default=TOLERANCES)

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        outcomes = tuple(tuple(agent) for agent in self.outcomes)
        tol = self.tolerances
        if len(outcomes) != len(dims):
            raise ValueError(f"plan has {len(outcomes)} agents for {len(dims)} parties")
        for i, agent in enumerate(outcomes):
            if len(agent) < 2:
                raise ValueError(f"agent {i + 1}: need ⊥ plus at least one labelled outcome")
            if any(p.dim != dims[i] for p in agent):
                raise ValueError(f"agent {i + 1}: projector dimension differs from {dims[i]}")
            for a in range(len(agent)):
                for b in range(a + 1, len(agent)):
                    if np.linalg.norm(agent[a].matrix @ agent[b].matrix) > tol.recon:
                        raise ValueError(f"agent {i + 1}: outcomes {a} and {b} are not orthogonal")
            total = sum(p.matrix for p in agent)
            if np.linalg.norm(total - np.eye(dims[i])) > tol.recon:
                raise ValueError(f"agent {i + 1}: outcomes do not sum to the identity")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "outcomes", outcomes)

    @property
    def n(self) -> int:
        return len(self.dims)

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "certified": self.certified,
            "agents": [[encode_matrix(p.matrix) for p in agent] for agent in self.outcomes],
        }

    @classmethod
    def from_dict(cls, doc: dict, source: str = "plan") -> "MeasurementPlan":
        if not isinstance(doc, dict):
            raise ValueError(f"{source}: top level must be an object")
        for key in ("dims", "agents"):
            if key not in doc:
                raise ValueError(f"{source}: missing field '{key}'")
        if not isinstance(doc["dims"], list) or not all(isinstance(d, int) for d in doc["dims"]):
            raise ValueError(f"{source}: field 'dims' must be a list of integers")
        if not isinstance(doc["agents"], list):
            raise ValueError(f"{source}: field 'agents' must be a list of projector lists")
        agents = []
        for i, agent in enumerate(doc["agents"]):
            if not isinstance(agent, list):
                raise ValueError(f"{source}: field 'agents'[{i}] must be a list of matrices")
            agents.append(tuple(
                Projector(decode_matrix(m, f"{source}: agents[{i}][{j}]"))
                for j, m in enumerate(agent)
            ))
        return cls(dims=tuple(doc["dims"]), outcomes=tuple(agents))


def build_consensus_measurements(
    state: StateVector,
    cert: SchmidtProjectorSet,
    tol: Tolerances = TOLERANCES,
) -> MeasurementPlan:
    """Agent i measures {P_⊥^i, P_1^i, …, P_L^i} with rows refined to supp(ρ_i)."""
    if not cert.full:
        raise ValueError("consensus plans need a certificate on every party")
    check = verify_schmidt_projectors(state, cert, tol)
    if not check:
        raise ValueError("certificate rejected: " + "; ".join(check.failures))
    refined = refine_to_support(state, cert)
    agents = []
    for i, d in enumerate(state.dims):
        supp = support_projector(local_state(state, i), tol).matrix
        bottom = Projector(np.eye(d) - supp)
        agents.append((bottom,) + tuple(row[i] for row in refined.rows))
    return MeasurementPlan(dims=state.dims, outcomes=tuple(agents), certified=True, tolerances=tol)


def computational_plan(dims: Sequence[int]) -> MeasurementPlan:
    """Label v+1 for basis vector |v⟩; ⊥ never occurs."""
    agents = []
    for d in dims:
        basis = np.eye(d)
        agents.append((Projector.zero(d),) + tuple(Projector.onto(basis[:, [v]]) for v in range(d)))
    return MeasurementPlan(dims=tuple(dims), outcomes=tuple(agents))


# ────────────────────────────────────────────────────────────────
# 2) exact distribution
# ----------------------------------------------------------------
class _OutcomeTree:
    """
    Conditional outcome probabilities for every reachable prefix of the
    sampling order; branches with absolute probability ≤ τ_rank are cut.
    """

    def __init__(self, state: StateVector, plan: MeasurementPlan, order: Sequence[int], tol: Tolerances):
        self.order = tuple(order)
        self.n = state.n
        self.children: Dict[Outcome, Tuple[np.ndarray, np.ndarray]] = {}
        self.leaves: OutcomeTable = {}
        self._walk(state, plan, (), state.amps, 1.0, tol)

    def _walk(self, state, plan, prefix, amps, p_prefix, tol) -> None:
        depth = len(prefix)
        if depth == self.n:
            outcome = [0] * self.n
            for agent, label in zip(self.order, prefix):
                outcome[agent] = label
            self.leaves[tuple(outcome)] = p_prefix
            return
        agent = self.order[depth]
        labels, probs = [], []
        for label, proj in enumerate(plan.outcomes[agent]):
            if proj.rank == 0:
                continue
            ops = [None] * self.n
            ops[agent] = proj
            nxt = apply_local(amps, state.dims, ops)
            p = float(np.vdot(nxt, nxt).real)
            if p <= tol.rank:
                continue
            labels.append(label)
            probs.append(p)
            self._walk(state, plan, prefix + (label,), nxt, p, tol)
        if labels:
            probs = np.array(probs)
            self.children[prefix] = (np.array(labels), np.cumsum(probs / probs.sum()))

    def sample(self, rng: np.random.Generator) -> Outcome:
        prefix: Outcome = ()
        while len(prefix) < self.n:
            labels, cdf = self.children[prefix]
            idx = min(int(np.searchsorted(cdf, rng.random(), side="right")), len(labels) - 1)
            prefix = prefix + (int(labels[idx]),)
        outcome = [0] * self.n
        for agent, label in zip(self.order, prefix):
            outcome[agent] = label
        return tuple(outcome)


def _check_order(order: Optional[Sequence[int]], n: int) -> Tuple[int, ...]:
    if order is None:
        return tuple(range(n))
    order = tuple(int(i) for i in order)
    if sorted(order) != list(range(n)):
        raise ValueError(f"order {list(order)} is not a permutation of the {n} agents")
    return order


def joint_outcome_distribution(
    state: StateVector,
    plan: MeasurementPlan,
    order: Optional[Sequence[int]] = None,
    tol: Tolerances = TOLERANCES,
) -> OutcomeTable:
    """Born probabilities ‖(⊗_i Π_{o_i})ψ‖² of every outcome tuple above τ_rank."""
    if tuple(state.dims) != plan.dims:
        raise ValueError(f"plan dims {list(plan.dims)} do not match state dims {list(state.dims)}")
    tree = _OutcomeTree(state, plan, _check_order(order, state.n), tol)
    return dict(sorted(tree.leaves.items()))


def is_consensus_table(table: OutcomeTable) -> bool:
    """Every listed tuple is constant and never ⊥."""
    return all(len(set(o)) == 1 and o[0] != BOTTOM for o in table)


# ────────────────────────────────────────────────────────────────
# 3) sampling
# ----------------------------------------------------------------
@dataclass(frozen=True)
class SimConfig:
    trials: int = TRIALS
    seed: int = SIM_SEED
    failed_agents: frozenset = frozenset()
    channel_drop_probability: float = 0.0
    workers: int = WORKERS
    order: Optional[Tuple[int, ...]] = None

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not 0.0 <= self.channel_drop_probability <= 1.0:
            raise ValueError(f"drop probability {self.channel_drop_probability} outside [0, 1]")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        object.__setattr__(self, "failed_agents", frozenset(int(i) for i in self.failed_agents))

    def live_agents(self, n: int) -> Tuple[int, ...]:
        if any(not 0 <= i < n for i in self.failed_agents):
            raise ValueError(f"failed agents {sorted(self.failed_agents)} out of range for {n} agents")
        live = tuple(i for i in range(n) if i not in self.failed_agents)
        if not live:
            raise ValueError("at least one agent must stay alive")
        return live


@dataclass(frozen=True)
class TrialStats:
    outcome_counts: Dict[Outcome, int]
    agreement_frequency: float
    exact_distribution: OutcomeTable
    consensus_value_histogram: Dict[int, int]
    trials: int
    live_agents: Tuple[int, ...]
    channel_drop_probability: float = 0.0
    messages_sent: int = 0

    @property
    def exact_consensus(self) -> bool:
        return is_consensus_table(self.exact_distribution)

    def to_frame(self) -> pd.DataFrame:
        keys = sorted(set(self.exact_distribution) | set(self.outcome_counts))
        df = pd.DataFrame({
            "outcome": [_key(k) for k in keys],
            "exact": [self.exact_distribution.get(k, 0.0) for k in keys],
            "count": [self.outcome_counts.get(k, 0) for k in keys],
        })
        df["frequency"] = df["count"] / self.trials
        df["sigma"] = np.sqrt(df["exact"] * (1.0 - df["exact"]).clip(lower=0.0) / self.trials)
        df["within_3sigma"] = (df["frequency"] - df["exact"]).abs() <= 3 * df["sigma"] + 1e-12
        return df

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "live_agents": [i + 1 for i in self.live_agents],
            "agreement_frequency": self.agreement_frequency,
            "exact_consensus": self.exact_consensus,
            "messages_sent": self.messages_sent,
            "channel_drop_probability": self.channel_drop_probability,
            "consensus_value_histogram": {str(k): v for k, v in sorted(self.consensus_value_histogram.items())},
            "outcome_counts": {_key(k): v for k, v in sorted(self.outcome_counts.items())},
            "exact_distribution": {_key(k): p for k, p in self.exact_distribution.items()},
            "within_3sigma": within_binomial_bounds(self),
        }


def within_binomial_bounds(stats: TrialStats, k: float = 3.0) -> bool:
    frame = stats.to_frame()
    bound = k * frame["sigma"] + 1e-12
    return bool(((frame["frequency"] - frame["exact"]).abs() <= bound).all())


def _run_chunk(tree: _OutcomeTree, seed: int, trials: range) -> Counter:
    counts: Counter = Counter()
    for t in trials:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(t,)))
        counts[tree.sample(rng)] += 1
    return counts


def run_trials(state: StateVector, plan: MeasurementPlan, config: SimConfig) -> TrialStats:
    """
    Sequential Born sampling in `config.order`. Trial t draws from its own
    sub-seed of `config.seed`, so results do not depend on `workers`.
    Failed agents are measured but stay silent.
    """
    if tuple(state.dims) != plan.dims:
        raise ValueError(f"plan dims {list(plan.dims)} do not match state dims {list(state.dims)}")
    live = config.live_agents(state.n)
    tree = _OutcomeTree(state, plan, _check_order(config.order, state.n), plan.tolerances)

    step = math.ceil(config.trials / config.workers)
    chunks = [range(s, min(s + step, config.trials)) for s in range(0, config.trials, step)]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        parts = list(pool.map(lambda r: _run_chunk(tree, config.seed, r), chunks))
    counts: Counter = sum(parts, Counter())

    agreed = 0
    histogram: Counter = Counter()
    for outcome, c in counts.items():
        reported = {outcome[i] for i in live}
        if len(reported) == 1 and BOTTOM not in reported:
            agreed += c
            histogram[reported.pop()] += c

    return TrialStats(
        outcome_counts=dict(sorted(counts.items())),
        agreement_frequency=agreed / config.trials,
        exact_distribution=dict(sorted(tree.leaves.items())),
        consensus_value_histogram=dict(sorted(histogram.items())),
        trials=config.trials,
        live_agents=live,
        channel_drop_probability=config.channel_drop_probability,
    )


# ────────────────────────────────────────────────────────────────
# 4) necessity probe
# ----------------------------------------------------------------
@dataclass(frozen=True)
class NecessityReport:
    samples: int
    outcomes: int
    min_disagreement: Optional[float]
    mean_disagreement: Optional[float]
    structurally_excluded: Tuple[int, ...]
    certificate_disagreement: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "outcomes": self.outcomes,
            "min_disagreement": self.min_disagreement,
            "mean_disagreement": self.mean_disagreement,
            "structurally_excluded": [i + 1 for i in self.structurally_excluded],
            "certificate_disagreement": self.certificate_disagreement,
        }


def random_split_plan(
    state: StateVector,
    outcomes: int,
    rng: np.random.Generator,
    tol: Tolerances = TOLERANCES,
) -> MeasurementPlan:
    """Each agent splits a Haar-rotated basis of supp(ρ_i) into `outcomes` nonempty parts."""
    agents = []
    for i, d in enumerate(state.dims):
        supp = support_projector(local_state(state, i), tol)
        basis = supp.range_vectors()
        r = basis.shape[1]
        if r < outcomes:
            raise ValueError(f"agent {i + 1}: support rank {r} < {outcomes} outcomes")
        rotated = basis @ haar_unitary(r, rng)
        cuts = sorted(rng.choice(np.arange(1, r), size=outcomes - 1, replace=False).tolist())
        edges = [0] + cuts + [r]
        parts = tuple(Projector.onto(rotated[:, a:b]) for a, b in zip(edges, edges[1:]))
        bottom = Projector(np.eye(d) - supp.matrix)
        agents.append((bottom,) + parts)
    return MeasurementPlan(dims=state.dims, outcomes=tuple(agents), tolerances=tol)


def _check_relabelings(n: int, outcomes: int, limit: int) -> None:
    count = math.factorial(outcomes) ** (n - 1)
    if count > limit:
        raise ValueError(
            f"{n} agents with {outcomes} outcomes need {count} relabelings, "
            f"above the limit of {limit} (PROBE_MAX_RELABELINGS)"
        )


def best_agreement(
    table: OutcomeTable,
    n: int,
    outcomes: int,
    limit: int = PROBE_MAX_RELABELINGS,
) -> float:
    """Largest agreement probability over relabelings of agents 2..n."""
    _check_relabelings(n, outcomes, limit)
    labels = list(range(1, outcomes + 1))
    best = 0.0
    for perms in itertools.product(itertools.permutations(labels), repeat=n - 1):
        maps = [None] + [dict(zip(labels, p)) for p in perms]
        agree = 0.0
        for outcome, p in table.items():
            if BOTTOM in outcome:
                continue
            if all(maps[i][outcome[i]] == outcome[0] for i in range(1, n)):
                agree += p
        best = max(best, agree)
    return best


def necessity_probe(
    state: StateVector,
    samples: int = PROBE_SAMPLES,
    seed: int = SIM_SEED,
    outcomes: int = PROBE_OUTCOMES,
    tol: Tolerances = TOLERANCES,
    max_relabelings: int = PROBE_MAX_RELABELINGS,
) -> NecessityReport:
    """
    Minimum disagreement probability over random plans in which every
    agent has `outcomes` nonnull outcomes. Refuses up front when the
    (outcomes!)^(n-1) relabelings exceed `max_relabelings`.
    """
    if samples < 1 or outcomes < 2:
        raise ValueError(f"need samples >= 1 and outcomes >= 2, got {samples}, {outcomes}")
    ranks = [support_rank(state, i, tol) for i in range(state.n)]
    excluded = tuple(i for i, r in enumerate(ranks) if r < 2)
    if excluded:
        return NecessityReport(samples, outcomes, None, None, excluded)
    outcomes = min([outcomes] + ranks)
    _check_relabelings(state.n, outcomes, max_relabelings)

    rng = np.random.default_rng(seed)
    gaps: List[float] = []
    for _ in range(samples):
        plan = random_split_plan(state, outcomes, rng, tol)
        table = joint_outcome_distribution(state, plan, tol=tol)
        gaps.append(max(0.0, 1.0 - best_agreement(table, state.n, outcomes, max_relabelings)))

    certificate_gap = None
    report = analyze(state, tol=tol)
    if report.undetermined:
        plan = build_consensus_measurements(state, report.certificate, tol)
        table = joint_outcome_distribution(state, plan, tol=tol)
        certificate_gap = float(sum(p for o, p in table.items() if len(set(o)) != 1 or o[0] == BOTTOM))

    return NecessityReport(
        samples=samples,
        outcomes=outcomes,
        min_disagreement=float(min(gaps)),
        mean_disagreement=float(np.mean(gaps)),
        structurally_excluded=(),
        certificate_disagreement=certificate_gap,
    )
