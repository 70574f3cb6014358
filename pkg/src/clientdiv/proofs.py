"""Simulated proofs of execution.

Two backends stand in for the real mechanisms:

* ``ATTESTED`` (TEE-style): the node signs ``digest || block || submitter``
  with an Ed25519 key. Verification needs the node's public key to be in the
  verifier's trusted set, playing the role of the manufacturer key chain.
* ``SUCCINCT`` (zkVM-style): the binding is a domain-separated SHA-256 over
  the same fields. It keeps the binding and cost profile of a succinct
  proof. It is not zero-knowledge and is not sound against a forger.

Each mechanism carries the cost profile measured for the real backend.
"""

import enum
import functools
import hashlib
import struct
from dataclasses import dataclass, replace

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import (
    Encoding,
    PublicFormat,
)

ADDRESS_SIZE = 20
DIGEST_SIZE = 32
SUCCINCT_DOMAIN = b"clientdiv/succinct-binding/v1"


class ProofMechanism(enum.Enum):
    SUCCINCT = 1
    ATTESTED = 2

    @classmethod
    def parse(cls, name):
        try:
            return cls[str(name).upper()]
        except KeyError:
            raise ValueError(f"unknown proof mechanism {name!r}") from None


class ProofError(Exception):
    """Proof failed verification."""


class UnknownCommitment(ProofError):
    pass


class InvalidBinding(ProofError):
    pass


class UntrustedAttester(ProofError):
    pass


class MalformedProof(ProofError):
    pass


@functools.lru_cache(maxsize=4096)
def address_from_public(public):
    """20-byte node address: the last 20 bytes of SHA-256(public key)."""
    return hashlib.sha256(public).digest()[-ADDRESS_SIZE:]


class NodeKey:
    """Ed25519 signing key plus derived node address."""

    __slots__ = ("secret", "public", "node_addr", "_sk")

    def __init__(self, secret):
        if len(secret) != 32:
            raise ValueError("secret must be 32 bytes")
        self._sk = Ed25519PrivateKey.from_private_bytes(secret)
        self.secret = bytes(secret)
        self.public = self._sk.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
        self.node_addr = address_from_public(self.public)

    @classmethod
    def from_seed(cls, seed, index=0):
        """Deterministic key for ``(seed, index)``."""
        material = b"clientdiv/node-key" + struct.pack(">qq", seed, index)
        return cls(hashlib.sha256(material).digest())

    def sign(self, message):
        return self._sk.sign(message)

    def __repr__(self):
        return f"NodeKey(addr={self.node_addr.hex()})"


@dataclass(frozen=True)
class CostModel:
    """Measured cost of producing and verifying one proof.

    ``overhead_factor`` is the published factor. It is kept as printed and
    can differ from ``proving_time_s / regular_time_s``; see
    ``measured_overhead``.
    """

    proving_time_s: float
    regular_time_s: float
    overhead_factor: float
    cpu_avg_pct: float
    cpu_max_pct: float
    mem_avg_mb: float
    mem_max_mb: float
    verify_gas_min: int
    verify_gas_avg: int
    verify_gas_max: int

    @property
    def measured_overhead(self):
        return self.proving_time_s / self.regular_time_s

    def verify_gas(self, stat="avg"):
        try:
            return {"min": self.verify_gas_min, "avg": self.verify_gas_avg,
                    "max": self.verify_gas_max}[stat]
        except KeyError:
            raise ValueError(f"stat must be min, avg or max, not {stat!r}") from None


_COST_MODELS = {
    # RISC Zero proof of the attestation-production function
    ProofMechanism.SUCCINCT: CostModel(
        proving_time_s=59.0,
        regular_time_s=15.14e-6,
        overhead_factor=39_333_333,
        cpu_avg_pct=90.05,
        cpu_max_pct=100.00,
        mem_avg_mb=1331,
        mem_max_mb=2150,
        verify_gas_min=288_458,
        verify_gas_avg=289_728,
        verify_gas_max=291_013,
    ),
    # SGX enclave, DCAP attestation verified on-chain
    ProofMechanism.ATTESTED: CostModel(
        proving_time_s=0.080,
        regular_time_s=1.42e-3,
        overhead_factor=56,
        cpu_avg_pct=22.24,
        cpu_max_pct=23.35,
        mem_avg_mb=21,
        mem_max_mb=21,
        verify_gas_min=5_397_746,
        verify_gas_avg=5_397_746,
        verify_gas_max=5_397_746,
    ),
}


def default_cost_model(mechanism):
    return _COST_MODELS[mechanism]


def _message(digest, block_number, submitter):
    return digest + struct.pack(">Q", block_number) + submitter


@dataclass(frozen=True)
class ExecutionProof:
    mechanism: ProofMechanism
    commitment_digest: bytes
    block_number: int
    submitter: bytes
    binding: bytes

    def encode(self):
        """Wire form: tag(1) || digest(32) || block(8, BE) || submitter(20) || binding."""
        return (bytes([self.mechanism.value]) + self.commitment_digest
                + struct.pack(">Q", self.block_number) + self.submitter
                + self.binding)

    @classmethod
    def decode(cls, data):
        head = 1 + DIGEST_SIZE + 8 + ADDRESS_SIZE
        if len(data) < head:
            raise MalformedProof(f"proof encoding too short ({len(data)} bytes)")
        try:
            mechanism = ProofMechanism(data[0])
        except ValueError:
            raise MalformedProof(f"unknown mechanism tag {data[0]}") from None
        digest = bytes(data[1:1 + DIGEST_SIZE])
        (block,) = struct.unpack(">Q", data[1 + DIGEST_SIZE:1 + DIGEST_SIZE + 8])
        submitter = bytes(data[1 + DIGEST_SIZE + 8:head])
        return cls(mechanism, digest, block, submitter, bytes(data[head:]))

    def mutated(self, **fields):
        return replace(self, **fields)


def _succinct_binding(digest, block_number, submitter):
    return hashlib.sha256(_message(digest, block_number, submitter)
                          + SUCCINCT_DOMAIN).digest()


def generate_proof(mechanism, identity, block_number, key):
    """Proof that ``key``'s node ran ``identity``'s code for ``block_number``."""
    if block_number < 0:
        raise ValueError("block_number must be non-negative")
    digest = identity.digest
    addr = key.node_addr
    if mechanism is ProofMechanism.ATTESTED:
        binding = key.sign(_message(digest, block_number, addr))
    else:
        binding = _succinct_binding(digest, block_number, addr)
    return ExecutionProof(mechanism, digest, block_number, addr, binding)


class TrustedKeys:
    """Trusted attester public keys, indexed by node address."""

    def __init__(self, publics=()):
        self._by_addr = {}
        for pub in publics:
            self.add(pub)

    def add(self, public):
        public = bytes(public)
        self._by_addr[address_from_public(public)] = public

    def discard(self, public):
        self._by_addr.pop(address_from_public(bytes(public)), None)

    def for_address(self, addr):
        return self._by_addr.get(addr)

    def __contains__(self, public):
        return self._by_addr.get(address_from_public(bytes(public))) == bytes(public)

    def __iter__(self):
        return iter(sorted(self._by_addr.values()))

    def __len__(self):
        return len(self._by_addr)


@functools.lru_cache(maxsize=4096)
def _ed25519_public(public):
    return Ed25519PublicKey.from_public_bytes(public)


def verify_proof(registry, trusted_keys, proof):
    """Return the proof's commitment digest if it verifies, else raise.

    ``trusted_keys`` may be a :class:`TrustedKeys` or any iterable of raw
    public keys; it is only consulted for attested proofs.
    """
    digest = proof.commitment_digest
    if digest not in registry:
        raise UnknownCommitment(f"commitment {digest.hex()} is not registered")
    if len(proof.submitter) != ADDRESS_SIZE:
        raise InvalidBinding("submitter must be a 20-byte address")
    if not 0 <= proof.block_number < 2 ** 64:
        raise InvalidBinding("block number out of range")

    if proof.mechanism is ProofMechanism.SUCCINCT:
        expected = _succinct_binding(digest, proof.block_number, proof.submitter)
        if proof.binding != expected:
            raise InvalidBinding("succinct binding does not match proof fields")
        return digest

    if not isinstance(trusted_keys, TrustedKeys):
        trusted_keys = TrustedKeys(trusted_keys)
    public = trusted_keys.for_address(proof.submitter)
    if public is None:
        raise UntrustedAttester(
            f"no trusted attestation key for {proof.submitter.hex()}")
    try:
        _ed25519_public(public).verify(
            proof.binding, _message(digest, proof.block_number, proof.submitter))
    except InvalidSignature:
        raise InvalidBinding("attestation signature does not verify") from None
    return digest
