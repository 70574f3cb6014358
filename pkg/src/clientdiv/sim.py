"""Block-driven agent simulation of validators choosing client implementations.

Each block, a few validators (round-robin over a seeded permutation)
re-evaluate which implementation pays best and may switch. Then every
validator proves execution of its current implementation and submits the
proof to the reward contract.

``run`` drives the full protocol (keys, proofs, verification, contract).
``run_counts`` replays the same dynamics through the counts-only kernel.
Both give the same counts, payouts and treasury for honest runs.
"""

import csv
import enum
import io
import json
import random
from dataclasses import dataclass, field, replace

from clientdiv import kernels
from clientdiv.contract import DiversityContract, RewardParams, WindowMode
from clientdiv.identity import CodeSegment, build_registry
from clientdiv.proofs import NodeKey, ProofMechanism, generate_proof


class ConfigInvalid(ValueError):
    pass


class Strategy(enum.Enum):
    RATIONAL = "rational"
    FIXED = "fixed"


@dataclass
class ValidatorAgent:
    key: NodeKey
    current_impl: str
    strategy: Strategy = Strategy.RATIONAL
    switch_cost: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    n_validators: int
    impls: tuple
    initial_assignment: dict
    params: RewardParams
    max_blocks: int
    seed: int = 0
    mechanism: ProofMechanism = ProofMechanism.ATTESTED
    treasury: int = None
    deciders_per_block: int = 1
    window_mode: WindowMode = WindowMode.SLIDING
    window_size: int = None
    strategy: Strategy = Strategy.RATIONAL
    n_fixed: int = 0
    switch_cost: int = 0
    step_id: str = "attest"

    def validate(self):
        if self.n_validators < 1:
            raise ConfigInvalid("n_validators must be positive")
        ids = [i for i, _ in self.impls]
        if not ids:
            raise ConfigInvalid("at least one implementation is required")
        if len(set(ids)) != len(ids):
            raise ConfigInvalid("implementation ids must be unique")
        if set(self.initial_assignment) - set(ids):
            raise ConfigInvalid("initial_assignment names unknown implementations")
        if any(n < 0 for n in self.initial_assignment.values()):
            raise ConfigInvalid("initial_assignment counts must be non-negative")
        if sum(self.initial_assignment.values()) != self.n_validators:
            raise ConfigInvalid(
                f"initial_assignment sums to {sum(self.initial_assignment.values())}, "
                f"expected {self.n_validators}")
        if self.max_blocks < 1:
            raise ConfigInvalid("max_blocks must be at least 1")
        if self.deciders_per_block < 1:
            raise ConfigInvalid("deciders_per_block must be positive")
        if not 0 <= self.n_fixed <= self.n_validators:
            raise ConfigInvalid("n_fixed must lie in [0, n_validators]")
        if self.switch_cost < 0:
            raise ConfigInvalid("switch_cost must be non-negative")
        if self.treasury is not None and self.treasury < 0:
            raise ConfigInvalid("treasury must be non-negative")
        if self.window_mode is WindowMode.SLIDING and self.window_size is not None \
                and self.window_size < 1:
            raise ConfigInvalid("window size must be positive")
        if not -2 ** 63 <= self.seed < 2 ** 63:
            raise ConfigInvalid("seed must fit in 64 bits")
        return self

    @property
    def impl_ids(self):
        return sorted(i for i, _ in self.impls)

    @property
    def effective_treasury(self):
        if self.treasury is not None:
            return self.treasury
        return self.n_validators * self.params.r_max * self.max_blocks

    @property
    def effective_window_size(self):
        if self.window_mode is WindowMode.CUMULATIVE:
            return None
        return self.window_size if self.window_size is not None else self.n_validators

    def with_seed(self, seed):
        return replace(self, seed=seed)

    def to_dict(self):
        return {
            "n_validators": self.n_validators,
            "impls": [{"id": i, "code_hex": bytes(c).hex()} for i, c in self.impls],
            "step_id": self.step_id,
            "initial_assignment": dict(sorted(self.initial_assignment.items())),
            "params": self.params.to_dict(),
            "mechanism": self.mechanism.name.lower(),
            "treasury": self.treasury,
            "max_blocks": self.max_blocks,
            "seed": self.seed,
            "deciders_per_block": self.deciders_per_block,
            "window": {"mode": self.window_mode.value, "size": self.window_size},
            "strategy": self.strategy.value,
            "n_fixed": self.n_fixed,
            "switch_cost": self.switch_cost,
        }

    @classmethod
    def from_dict(cls, d):
        try:
            impls = []
            for item in d["impls"]:
                if "code_hex" in item:
                    code = bytes.fromhex(item["code_hex"])
                else:
                    code = item["code"].encode()
                impls.append((item["id"], code))
            window = d.get("window") or {}
            return cls(
                n_validators=d["n_validators"],
                impls=tuple(impls),
                initial_assignment=dict(d["initial_assignment"]),
                params=RewardParams.from_dict(d["params"]),
                max_blocks=d["max_blocks"],
                seed=d.get("seed", 0),
                mechanism=ProofMechanism.parse(d.get("mechanism", "attested")),
                treasury=d.get("treasury"),
                deciders_per_block=d.get("deciders_per_block", 1),
                window_mode=WindowMode(window.get("mode", "sliding")),
                window_size=window.get("size"),
                strategy=Strategy(d.get("strategy", "rational")),
                n_fixed=d.get("n_fixed", 0),
                switch_cost=d.get("switch_cost", 0),
                step_id=d.get("step_id", "attest"),
            ).validate()
        except ConfigInvalid:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigInvalid(f"bad scenario config: {exc}") from exc

    def canonical_bytes(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()


def _impls(ids):
    return tuple((i, f"client{i}-v1::attestation-production".encode()) for i in ids)


def scenario_70_20_10(seed=42, max_blocks=1201):
    """20 validators starting at A:14 B:4 C:2."""
    return ScenarioConfig(
        n_validators=20, impls=_impls("ABC"),
        initial_assignment={"A": 14, "B": 4, "C": 2},
        params=RewardParams(epsilon=1, r_min=2, r_max=10),
        max_blocks=max_blocks, seed=seed,
    )


def scenario_83_8_8(seed=42, max_blocks=1201):
    """12 validators starting at A:10 B:1 C:1."""
    return ScenarioConfig(
        n_validators=12, impls=_impls("ABC"),
        initial_assignment={"A": 10, "B": 1, "C": 1},
        params=RewardParams(epsilon=1, r_min=2, r_max=10),
        max_blocks=max_blocks, seed=seed,
    )


SCENARIOS = {
    "scenario-70-20-10": scenario_70_20_10,
    "scenario-83-8-8": scenario_83_8_8,
}


@dataclass(frozen=True)
class BlockRow:
    block: int
    counts: tuple
    rewards_paid: int
    cumulative_rewards: tuple
    treasury: int
    validator_impls: tuple = field(default=(), compare=False)
    validator_rewards: tuple = field(default=(), compare=False)


@dataclass
class TimeSeries:
    impl_ids: list
    rows: list = field(default_factory=list)
    config: ScenarioConfig = None

    def __len__(self):
        return len(self.rows)

    def counts(self):
        return [r.counts for r in self.rows]

    def csv_text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["block"] + [f"impl_{i}_count" for i in self.impl_ids]
                   + ["rewards_paid", "treasury"])
        for r in self.rows:
            w.writerow([r.block, *r.counts, r.rewards_paid, r.treasury])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as f:
            f.write(self.csv_text())

    def to_dict(self):
        return {
            "config": self.config.to_dict() if self.config else None,
            "impl_ids": list(self.impl_ids),
            "rows": [
                {"block": r.block, "counts": dict(zip(self.impl_ids, r.counts)),
                 "rewards_paid": r.rewards_paid,
                 "cumulative_rewards": dict(zip(self.impl_ids, r.cumulative_rewards)),
                 "treasury": r.treasury}
                for r in self.rows
            ],
        }

    def write_json(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, sort_keys=True, indent=1)
            f.write("\n")


def agent_decide(agent, contract):
    """Implementation the agent should run next block.

    Every implementation is priced at the share the contract currently
    reports, which is the share applied to the agent's next submission
    (rewards use the share before the submission is counted). A switch
    costs ``agent.switch_cost``. Ties keep the current implementation, then
    go to the lexicographically first id.
    """
    if agent.strategy is Strategy.FIXED:
        return agent.current_impl
    dist = contract.window.impl_counts(contract.registry)
    ids = list(dist)
    counts = [dist[i] for i in ids]
    p = contract.params
    j = kernels.choose_impl(counts, sum(counts), ids.index(agent.current_impl),
                            agent.switch_cost, p.epsilon, p.r_min, p.r_max)
    return ids[j]


def _initial_layout(config):
    ids = config.impl_ids
    assignment = []
    for impl in ids:
        assignment.extend([impl] * config.initial_assignment.get(impl, 0))
    order = list(range(config.n_validators))
    random.Random(config.seed).shuffle(order)
    strategies = [Strategy.FIXED if (config.strategy is Strategy.FIXED or v < config.n_fixed)
                  else Strategy.RATIONAL for v in range(config.n_validators)]
    return ids, assignment, order, strategies


class Simulation:
    """Stepwise protocol simulation; ``run`` drives it to ``max_blocks``."""

    def __init__(self, config):
        config.validate()
        self.config = config
        ids, assignment, order, strategies = _initial_layout(config)
        self.impl_ids = ids
        code = dict(config.impls)
        self.registry = build_registry(
            CodeSegment(i, config.step_id, code[i]) for i in ids)
        self.identities = {i: self.registry.get(i, config.step_id) for i in ids}
        self.agents = [
            ValidatorAgent(NodeKey.from_seed(config.seed, v), assignment[v],
                           strategies[v], config.switch_cost)
            for v in range(config.n_validators)
        ]
        self.owner = NodeKey.from_seed(config.seed, -1)
        self.contract = DiversityContract(
            owner=self.owner.node_addr,
            registry=self.registry,
            params=config.params,
            validators=[a.key.node_addr for a in self.agents],
            trusted_keys=[a.key.public for a in self.agents],
            treasury=config.effective_treasury,
            window_mode=config.window_mode,
            window_size=config.effective_window_size,
        )
        self.order = order
        self._ptr = 0
        self._cumulative = [0] * len(ids)
        self.series = TimeSeries(list(ids), config=config)

    def decide(self):
        n = len(self.agents)
        for _ in range(self.config.deciders_per_block):
            agent = self.agents[self.order[self._ptr % n]]
            self._ptr += 1
            agent.current_impl = agent_decide(agent, self.contract)

    def submit_all(self):
        block = self.contract.current_block
        mech = self.config.mechanism
        impls, rewards = [], []
        for agent in self.agents:
            proof = generate_proof(mech, self.identities[agent.current_impl],
                                   block, agent.key)
            outcome = self.contract.submit_proof(proof)
            impls.append(agent.current_impl)
            rewards.append(outcome.reward)
        return impls, rewards

    def step(self):
        block = self.contract.current_block
        treasury_before = self.contract.treasury
        self.decide()
        impls, rewards = self.submit_all()
        index = {impl: k for k, impl in enumerate(self.impl_ids)}
        counts = [0] * len(self.impl_ids)
        for impl, r in zip(impls, rewards):
            counts[index[impl]] += 1
            self._cumulative[index[impl]] += r
        # paid = treasury delta, so injected submissions between steps are counted too
        row = BlockRow(
            block=block,
            counts=tuple(counts),
            rewards_paid=treasury_before - self.contract.treasury,
            cumulative_rewards=tuple(self._cumulative),
            treasury=self.contract.treasury,
            validator_impls=tuple(impls),
            validator_rewards=tuple(rewards),
        )
        self.series.rows.append(row)
        self.contract.advance_block()
        return row

    def run(self):
        while len(self.series.rows) < self.config.max_blocks:
            self.step()
        return self.series


def run(config):
    """Run the full protocol simulation and return its time series."""
    return Simulation(config).run()


def run_counts(config):
    """Counts-only replay of ``run`` through the compiled (or Python) kernel.

    No keys or proofs are produced. Per-validator detail is not recorded.
    """
    config.validate()
    ids, assignment, order, strategies = _initial_layout(config)
    index = {impl: k for k, impl in enumerate(ids)}
    n = config.n_validators
    p = config.params
    window = config.effective_window_size or 0
    counts, paid, treasury = kernels.run_dynamics(
        [index[i] for i in assignment], order,
        [s is Strategy.RATIONAL for s in strategies],
        [config.switch_cost] * n, len(ids),
        p.epsilon, p.r_min, p.r_max, window, config.effective_treasury,
        config.max_blocks, config.deciders_per_block,
    )
    series = TimeSeries(list(ids), config=config)
    for b in range(config.max_blocks):
        series.rows.append(BlockRow(b, tuple(counts[b]), paid[b], (), treasury[b]))
    return series


def detect_convergence(series, spread, hold_blocks):
    """First block from which ``max - min`` of the counts stays within ``spread``.

    The condition must hold on every block in ``[b, b + hold_blocks]``, and
    all of those blocks must be present in the series. Returns None if no
    such block exists.
    """
    if spread < 0:
        raise ValueError("spread must be non-negative")
    rows = series.counts() if isinstance(series, TimeSeries) else list(series)
    ok_run = 0
    # scan backwards: ok_run = length of the all-ok stretch starting at b
    first = None
    for b in range(len(rows) - 1, -1, -1):
        c = rows[b]
        ok_run = ok_run + 1 if max(c) - min(c) <= spread else 0
        if ok_run >= hold_blocks + 1:
            first = b
    return first
