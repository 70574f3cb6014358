"""Code-identity commitments for (implementation, protocol step) pairs."""

import hashlib
from dataclasses import dataclass

DIGEST_SIZE = 32


class IdentityError(ValueError):
    """Base class for commitment and registry errors."""


class RejectedInput(IdentityError):
    pass


class NonDistinctFingerprint(IdentityError):
    """Two implementations committed to byte-identical code."""


class DuplicateKey(IdentityError):
    pass


@dataclass(frozen=True)
class CodeSegment:
    impl_id: str
    step_id: str
    code: bytes

    def __post_init__(self):
        if not self.impl_id or not self.step_id:
            raise RejectedInput("impl_id and step_id must be non-empty")
        if not isinstance(self.code, (bytes, bytearray)):
            raise RejectedInput("code must be bytes")
        if len(self.code) == 0:
            raise RejectedInput(
                f"empty code segment for {self.impl_id}/{self.step_id}")
        object.__setattr__(self, "code", bytes(self.code))


@dataclass(frozen=True)
class CodeIdentity:
    impl_id: str
    step_id: str
    digest: bytes

    def __post_init__(self):
        if len(self.digest) != DIGEST_SIZE:
            raise RejectedInput(f"digest must be {DIGEST_SIZE} bytes")

    @property
    def key(self):
        return (self.impl_id, self.step_id)

    def to_dict(self):
        return {"impl_id": self.impl_id, "step_id": self.step_id,
                "digest": self.digest.hex()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["impl_id"], d["step_id"], bytes.fromhex(d["digest"]))


def compute_commitment(segment):
    """Commit to a code segment: the SHA-256 digest of its bytes."""
    return CodeIdentity(segment.impl_id, segment.step_id,
                        hashlib.sha256(segment.code).digest())


class CommitmentRegistry:
    """Immutable, sorted set of code identities.

    Entries are ordered by ``(impl_id, step_id)``. Digests and keys are
    unique; two implementations sharing a digest cannot be told apart and
    are rejected.
    """

    def __init__(self, identities):
        entries = sorted(identities, key=lambda c: c.key)
        by_digest = {}
        by_key = {}
        for ident in entries:
            if ident.key in by_key:
                raise DuplicateKey(
                    f"duplicate registration for {ident.impl_id}/{ident.step_id}")
            other = by_digest.get(ident.digest)
            if other is not None:
                if other.impl_id != ident.impl_id:
                    raise NonDistinctFingerprint(
                        f"{ident.impl_id}/{ident.step_id} and "
                        f"{other.impl_id}/{other.step_id} share digest "
                        f"{ident.digest.hex()}")
                raise DuplicateKey(
                    f"{ident.impl_id} registers digest {ident.digest.hex()} twice")
            by_key[ident.key] = ident
            by_digest[ident.digest] = ident
        self._entries = tuple(entries)
        self._by_digest = by_digest
        self._by_key = by_key

    @property
    def entries(self):
        return self._entries

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __contains__(self, digest):
        return digest in self._by_digest

    def __eq__(self, other):
        return isinstance(other, CommitmentRegistry) and self._entries == other._entries

    def __hash__(self):
        return hash(self._entries)

    def lookup(self, digest):
        """Identity registered under ``digest``, or None."""
        return self._by_digest.get(digest)

    def get(self, impl_id, step_id):
        return self._by_key.get((impl_id, step_id))

    def impl_ids(self):
        """Sorted distinct implementation ids."""
        return sorted({c.impl_id for c in self._entries})

    def with_identity(self, identity):
        return CommitmentRegistry(self._entries + (identity,))

    def without_digest(self, digest):
        if digest not in self._by_digest:
            raise IdentityError(f"digest {digest.hex()} not registered")
        return CommitmentRegistry(c for c in self._entries if c.digest != digest)

    def to_list(self):
        return [c.to_dict() for c in self._entries]

    @classmethod
    def from_list(cls, items):
        return cls(CodeIdentity.from_dict(d) for d in items)


def build_registry(segments):
    """Commit every segment and collect the results into a registry."""
    segments = list(segments)
    if not segments:
        raise RejectedInput("at least one code segment is required")
    return CommitmentRegistry(compute_commitment(s) for s in segments)
