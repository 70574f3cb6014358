"""Failure-impact and cost analysis.

Thresholds: an implementation run by fewer than 1/3 of nodes is a minority
client, by more than 2/3 a supermajority client, and anything in between
(both bounds included) a majority client. A consensus bug in a
supermajority client finalizes the wrong state. A bug in a majority client
gets its nodes mass-slashed.
"""

import enum
from dataclasses import dataclass
from fractions import Fraction

from clientdiv.proofs import default_cost_model

ONE_THIRD = Fraction(1, 3)
TWO_THIRDS = Fraction(2, 3)


class UnknownImpl(KeyError):
    pass


class ClientClass(enum.Enum):
    MINORITY = "minority"
    MAJORITY = "majority"
    SUPERMAJORITY = "supermajority"


def classify(share):
    share = Fraction(share)
    if not 0 <= share <= 1:
        raise ValueError(f"share must lie in [0, 1], got {share}")
    if share < ONE_THIRD:
        return ClientClass.MINORITY
    if share > TWO_THIRDS:
        return ClientClass.SUPERMAJORITY
    return ClientClass.MAJORITY


@dataclass(frozen=True)
class ResilienceReport:
    buggy_impl: str
    affected_fraction: Fraction
    client_class: ClientClass
    slashed_count: int
    corrupted_state_accepted: bool

    def to_dict(self):
        return {
            "buggy_impl": self.buggy_impl,
            "affected_fraction": float(self.affected_fraction),
            "affected_fraction_exact": str(self.affected_fraction),
            "class": self.client_class.value,
            "slashed_count": self.slashed_count,
            "corrupted_state_accepted": self.corrupted_state_accepted,
        }


def slash_impact(counts, buggy):
    """Impact of a consensus bug in ``buggy`` given node counts per impl.

    Every node running the buggy client is counted as slashed. The wrong
    state is finalized only when those nodes exceed two thirds of the network.
    """
    if buggy not in counts:
        raise UnknownImpl(buggy)
    total = sum(counts.values())
    if total <= 0:
        raise ValueError("distribution has no nodes")
    slashed = counts[buggy]
    frac = Fraction(slashed, total)
    return ResilienceReport(
        buggy_impl=buggy,
        affected_fraction=frac,
        client_class=classify(frac),
        slashed_count=slashed,
        corrupted_state_accepted=frac > TWO_THIRDS,
    )


def proving_feasible(mechanism, block_time_s):
    """Whether one proof fits in a block interval, and proving time / block time."""
    if block_time_s <= 0:
        raise ValueError("block_time_s must be positive")
    proving = default_cost_model(mechanism).proving_time_s
    return proving <= block_time_s, proving / block_time_s


def break_even_reward(mechanism, gas_price, stat="avg"):
    """Smallest reward that pays for verifying one proof on-chain.

    ``gas_price`` is in reward units per gas; ``stat`` selects the min, avg
    or max measured verification gas.
    """
    if gas_price < 0:
        raise ValueError("gas_price must be non-negative")
    return default_cost_model(mechanism).verify_gas(stat) * gas_price


def econ_report(mechanism, gas_price, block_time_s=12.0):
    cost = default_cost_model(mechanism)
    feasible, margin = proving_feasible(mechanism, block_time_s)
    return {
        "mechanism": mechanism.name.lower(),
        "gas_price": gas_price,
        "block_time_s": block_time_s,
        "break_even_reward": {s: break_even_reward(mechanism, gas_price, s)
                              for s in ("min", "avg", "max")},
        "proving_feasible": feasible,
        "proving_margin": margin,
        "cost_model": {
            "proving_time_s": cost.proving_time_s,
            "regular_time_s": cost.regular_time_s,
            "overhead_factor": cost.overhead_factor,
            "cpu_avg_pct": cost.cpu_avg_pct,
            "cpu_max_pct": cost.cpu_max_pct,
            "mem_avg_mb": cost.mem_avg_mb,
            "mem_max_mb": cost.mem_max_mb,
            "verify_gas_min": cost.verify_gas_min,
            "verify_gas_avg": cost.verify_gas_avg,
            "verify_gas_max": cost.verify_gas_max,
        },
    }
