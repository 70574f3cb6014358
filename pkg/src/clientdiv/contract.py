"""Minority-client reward contract, modelled off-chain.

The contract holds the approved commitments, estimates the implementation
distribution from verified proof submissions, and pays each submitter from
a treasury according to the share its implementation holds.
"""

import enum
import json
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from clientdiv import kernels
from clientdiv.identity import CodeIdentity, CommitmentRegistry
from clientdiv.proofs import ProofError, TrustedKeys, verify_proof


class ContractError(Exception):
    pass


class NotOwner(ContractError):
    pass


class InvalidParams(ContractError, ValueError):
    pass


@dataclass(frozen=True)
class RewardParams:
    """Reward levels in whole units, with ``r_max >= r_min > epsilon >= 0``."""

    epsilon: int
    r_min: int
    r_max: int

    def __post_init__(self):
        for name in ("epsilon", "r_min", "r_max"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise InvalidParams(f"{name} must be an integer number of units, got {value!r}")
        if not self.r_max >= self.r_min > self.epsilon >= 0:
            raise InvalidParams(
                f"need r_max >= r_min > epsilon >= 0, got "
                f"epsilon={self.epsilon} r_min={self.r_min} r_max={self.r_max}")

    def scaled(self, k):
        return RewardParams(self.epsilon * k, self.r_min * k, self.r_max * k)

    def to_dict(self):
        return {"epsilon": self.epsilon, "r_min": self.r_min, "r_max": self.r_max}

    @classmethod
    def from_dict(cls, d):
        return cls(d["epsilon"], d["r_min"], d["r_max"])


def reward(share, n_impls, params):
    """Payout for a submission whose implementation holds ``share``.

    Above ``1 / n_impls`` the flat ``epsilon`` is paid. At or below it the
    payout falls linearly from ``r_max`` at share 0 to ``r_min`` at
    ``1 / n_impls``, rounded half-up to whole units.
    """
    share = Fraction(share)
    if not 0 <= share <= 1:
        raise ValueError(f"share must lie in [0, 1], got {share}")
    if n_impls < 1:
        raise ValueError("n_impls must be positive")
    return kernels.reward_units(share.numerator, share.denominator, n_impls,
                                params.epsilon, params.r_min, params.r_max)


def reward_exact(share, n_impls, params):
    """The same curve as :func:`reward`, unrounded."""
    share = Fraction(share)
    if share * n_impls > 1:
        return Fraction(params.epsilon)
    return params.r_max - share * n_impls * (params.r_max - params.r_min)


class WindowMode(enum.Enum):
    CUMULATIVE = "cumulative"
    SLIDING = "sliding"


class DistributionWindow:
    """Verified submissions the distribution estimate is computed from.

    In sliding mode only the last ``size`` submissions count; the oldest is
    evicted as each new one arrives.
    """

    def __init__(self, mode=WindowMode.SLIDING, size=None):
        if mode is WindowMode.SLIDING and (size is None or size < 1):
            raise ValueError("sliding window needs a positive size")
        self.mode = mode
        self.size = size if mode is WindowMode.SLIDING else None
        self.counts = {}
        self.recent = deque()

    @property
    def total(self):
        return sum(self.counts.values())

    def record(self, block, digest):
        self.counts[digest] = self.counts.get(digest, 0) + 1
        if self.mode is WindowMode.SLIDING:
            self.recent.append((block, digest))
            while len(self.recent) > self.size:
                _, old = self.recent.popleft()
                self.counts[old] -= 1
                if self.counts[old] == 0:
                    del self.counts[old]

    def purge(self, digest):
        self.counts.pop(digest, None)
        if self.recent:
            self.recent = deque(e for e in self.recent if e[1] != digest)

    def impl_counts(self, registry):
        out = {impl: 0 for impl in registry.impl_ids()}
        for digest, n in self.counts.items():
            out[registry.lookup(digest).impl_id] += n
        return out

    def to_dict(self):
        d = {"mode": self.mode.value, "size": self.size,
             "counts": {k.hex(): v for k, v in sorted(self.counts.items())}}
        if self.mode is WindowMode.SLIDING:
            d["recent"] = [[b, dg.hex()] for b, dg in self.recent]
        return d

    @classmethod
    def from_dict(cls, d):
        w = cls(WindowMode(d["mode"]), d.get("size"))
        if w.mode is WindowMode.SLIDING:
            for b, dg in d.get("recent", []):
                w.record(b, bytes.fromhex(dg))
        else:
            w.counts = {bytes.fromhex(k): v for k, v in d["counts"].items()}
        return w


class Reason(enum.Enum):
    OK = "ok"
    NOT_EXPECTED = "not_expected"
    DUPLICATE = "duplicate"
    STALE = "stale"
    VERIFY_FAIL = "verify_fail"
    INSUFFICIENT_TREASURY = "insufficient_treasury"


@dataclass(frozen=True)
class RewardOutcome:
    accepted: bool
    reward: int
    share_at_submission: Fraction
    reason: Reason
    detail: str = ""


def _rejected(reason, detail=""):
    return RewardOutcome(False, 0, Fraction(0), reason, detail)


class DiversityContract:
    """Reward state machine. Single writer; callers serialize mutations.

    ``validators`` are the addresses expected to submit once per block. The
    sliding window defaults to one submission per validator.
    """

    def __init__(self, owner, registry, params, validators=(), trusted_keys=(),
                 treasury=0, window_mode=WindowMode.SLIDING, window_size=None,
                 start_block=0):
        if treasury < 0:
            raise ValueError("treasury must be non-negative")
        self.owner = bytes(owner)
        self.registry = registry
        self.params = params
        self.validators = {bytes(v) for v in validators}
        self.trusted_keys = (trusted_keys if isinstance(trusted_keys, TrustedKeys)
                             else TrustedKeys(trusted_keys))
        self.treasury = treasury
        if window_mode is WindowMode.SLIDING and window_size is None:
            window_size = max(1, len(self.validators))
        self.window = DistributionWindow(window_mode, window_size)
        self.current_block = start_block
        self.submitted_this_block = set()
        self.balances = {}

    # -- submissions -----------------------------------------------------

    def submit_proof(self, proof):
        addr = proof.submitter
        if addr not in self.validators:
            return _rejected(Reason.NOT_EXPECTED, "submitter is not a registered validator")
        if proof.block_number != self.current_block:
            return _rejected(Reason.STALE, f"proof is for block {proof.block_number}, "
                                           f"contract is at {self.current_block}")
        if addr in self.submitted_this_block:
            return _rejected(Reason.DUPLICATE, "already submitted for this block")
        try:
            digest = verify_proof(self.registry, self.trusted_keys, proof)
        except ProofError as exc:
            return _rejected(Reason.VERIFY_FAIL, f"{type(exc).__name__}: {exc}")

        impl = self.registry.lookup(digest).impl_id
        counts = self.window.impl_counts(self.registry)
        total = sum(counts.values())
        share = Fraction(counts[impl], total) if total else Fraction(0)
        r = reward(share, len(counts), self.params)

        self.window.record(self.current_block, digest)
        self.submitted_this_block.add(addr)
        if r > self.treasury:
            return RewardOutcome(False, 0, share, Reason.INSUFFICIENT_TREASURY,
                                 f"reward {r} exceeds treasury {self.treasury}")
        self.treasury -= r
        self.balances[addr] = self.balances.get(addr, 0) + r
        return RewardOutcome(True, r, share, Reason.OK)

    def advance_block(self):
        self.current_block += 1
        self.submitted_this_block.clear()
        return self

    # -- queries -----------------------------------------------------------

    def get_distribution(self):
        counts = self.window.impl_counts(self.registry)
        total = sum(counts.values())
        if total == 0:
            return {impl: Fraction(0) for impl in counts}
        return {impl: Fraction(n, total) for impl, n in counts.items()}

    def get_minority(self):
        counts = self.window.impl_counts(self.registry)
        if not counts:
            raise ContractError("no approved implementations")
        # impl_ids are sorted, so min() keeps the lexicographically first on ties
        return min(counts, key=lambda impl: counts[impl])

    def supported_versions(self):
        return list(self.registry)

    # -- owner-guarded -----------------------------------------------------

    def _check_owner(self, caller):
        if bytes(caller) != self.owner:
            raise NotOwner(f"{bytes(caller).hex()} is not the contract owner")

    def set_params(self, caller, params):
        self._check_owner(caller)
        if not isinstance(params, RewardParams):
            params = RewardParams(*params)
        self.params = params
        return self

    def manage_version(self, caller, action, identity):
        """Add or remove an approved code identity.

        Removing an identity also drops its submissions from the window.
        """
        self._check_owner(caller)
        if action == "add":
            self.registry = self.registry.with_identity(identity)
        elif action == "remove":
            self.registry = self.registry.without_digest(identity.digest)
            self.window.purge(identity.digest)
        else:
            raise ValueError(f"action must be 'add' or 'remove', not {action!r}")
        return self

    def register_validator(self, caller, addr):
        self._check_owner(caller)
        self.validators.add(bytes(addr))
        return self

    def add_trusted_key(self, caller, public):
        self._check_owner(caller)
        self.trusted_keys.add(public)
        return self

    def fund(self, amount):
        if amount < 0:
            raise ValueError("amount must be non-negative")
        self.treasury += amount
        return self

    # -- serialization -----------------------------------------------------

    def snapshot(self):
        return {
            "owner": self.owner.hex(),
            "registry": self.registry.to_list(),
            "params": self.params.to_dict(),
            "window": self.window.to_dict(),
            "treasury": self.treasury,
            "validators": sorted(v.hex() for v in self.validators),
            "trusted_keys": [k.hex() for k in self.trusted_keys],
            "current_block": self.current_block,
            "submitted_this_block": sorted(a.hex() for a in self.submitted_this_block),
            "balances": {a.hex(): n for a, n in sorted(self.balances.items())},
        }

    def snapshot_bytes(self):
        """Canonical JSON encoding of the full state."""
        return json.dumps(self.snapshot(), sort_keys=True,
                          separators=(",", ":")).encode()

    @classmethod
    def from_snapshot(cls, snap):
        window = DistributionWindow.from_dict(snap["window"])
        c = cls(
            owner=bytes.fromhex(snap["owner"]),
            registry=CommitmentRegistry(CodeIdentity.from_dict(d) for d in snap["registry"]),
            params=RewardParams.from_dict(snap["params"]),
            validators=[bytes.fromhex(v) for v in snap["validators"]],
            trusted_keys=[bytes.fromhex(k) for k in snap["trusted_keys"]],
            treasury=snap["treasury"],
            window_mode=window.mode,
            window_size=window.size,
            start_block=snap["current_block"],
        )
        c.window = window
        c.submitted_this_block = {bytes.fromhex(a) for a in snap["submitted_this_block"]}
        c.balances = {bytes.fromhex(a): n for a, n in snap.get("balances", {}).items()}
        return c
