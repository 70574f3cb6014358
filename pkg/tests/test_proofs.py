import hashlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clientdiv.proofs import (
    ExecutionProof,
    InvalidBinding,
    MalformedProof,
    NodeKey,
    ProofError,
    ProofMechanism,
    TrustedKeys,
    UnknownCommitment,
    UntrustedAttester,
    default_cost_model,
    generate_proof,
    verify_proof,
)

MECHS = list(ProofMechanism)


def test_node_key_derivation(keys):
    k = keys[0]
    assert len(k.public) == 32
    assert k.node_addr == hashlib.sha256(k.public).digest()[-20:]
    assert NodeKey.from_seed(7, 0).public == k.public
    assert NodeKey.from_seed(7, 1).public != k.public


@pytest.mark.parametrize("mech", MECHS)
def test_roundtrip(registry, keys, mech):
    ident = registry.get("B", "attest")
    proof = generate_proof(mech, ident, 17, keys[1])
    assert verify_proof(registry, [keys[1].public], proof) == ident.digest


@pytest.mark.parametrize("mech", MECHS)
def test_generation_is_deterministic(registry, keys, mech):
    ident = registry.get("A", "attest")
    assert generate_proof(mech, ident, 5, keys[0]) == generate_proof(mech, ident, 5, keys[0])


@pytest.mark.parametrize("mech", MECHS)
def test_block_is_bound(registry, keys, mech):
    ident = registry.get("A", "attest")
    p0 = generate_proof(mech, ident, 5, keys[0])
    p1 = generate_proof(mech, ident, 6, keys[0])
    assert p0.binding != p1.binding


def test_attested_trusted_key_accepted(registry, keys):
    proof = generate_proof(ProofMechanism.ATTESTED, registry.get("C", "attest"), 0, keys[2])
    assert verify_proof(registry, TrustedKeys([keys[2].public]), proof) == proof.commitment_digest


@pytest.mark.parametrize("mech", MECHS)
def test_flipped_block_rejected(registry, keys, mech):
    proof = generate_proof(mech, registry.get("A", "attest"), 9, keys[0])
    with pytest.raises(InvalidBinding):
        verify_proof(registry, [keys[0].public], proof.mutated(block_number=10))


def test_untrusted_attester(registry, keys):
    proof = generate_proof(ProofMechanism.ATTESTED, registry.get("A", "attest"), 1, keys[3])
    with pytest.raises(UntrustedAttester):
        verify_proof(registry, [keys[0].public], proof)


def test_succinct_needs_no_trusted_key(registry, keys):
    proof = generate_proof(ProofMechanism.SUCCINCT, registry.get("A", "attest"), 1, keys[3])
    assert verify_proof(registry, [], proof) == proof.commitment_digest


def test_unknown_commitment(registry, keys):
    proof = generate_proof(ProofMechanism.SUCCINCT, registry.get("A", "attest"), 1, keys[0])
    with pytest.raises(UnknownCommitment):
        verify_proof(registry, [], proof.mutated(commitment_digest=b"\x11" * 32))


def test_swapped_digest_rejected(registry, keys):
    proof = generate_proof(ProofMechanism.ATTESTED, registry.get("A", "attest"), 1, keys[0])
    other = registry.get("B", "attest").digest
    with pytest.raises(InvalidBinding):
        verify_proof(registry, [keys[0].public], proof.mutated(commitment_digest=other))


def test_mechanism_switch_rejected(registry, keys):
    proof = generate_proof(ProofMechanism.ATTESTED, registry.get("A", "attest"), 1, keys[0])
    with pytest.raises(InvalidBinding):
        verify_proof(registry, [keys[0].public], proof.mutated(mechanism=ProofMechanism.SUCCINCT))


@pytest.mark.parametrize("mech", MECHS)
def test_wire_encoding_roundtrip(registry, keys, mech):
    proof = generate_proof(mech, registry.get("A", "attest"), 2 ** 40 + 3, keys[0])
    data = proof.encode()
    assert data[0] == mech.value
    assert data[1:33] == proof.commitment_digest
    assert data[33:41] == (2 ** 40 + 3).to_bytes(8, "big")
    assert data[41:61] == keys[0].node_addr
    assert data[61:] == proof.binding
    assert ExecutionProof.decode(data) == proof


def test_decode_rejects_garbage():
    with pytest.raises(MalformedProof):
        ExecutionProof.decode(b"\x01" * 10)
    with pytest.raises(MalformedProof):
        ExecutionProof.decode(b"\x09" + b"\x00" * 70)


@settings(max_examples=60, deadline=None)
@given(mech=st.sampled_from(MECHS), block=st.integers(0, 2 ** 63),
       impl=st.sampled_from("ABC"), key_index=st.integers(0, 5),
       field=st.sampled_from(["digest", "block", "submitter", "binding"]),
       noise=st.binary(min_size=1, max_size=8))
def test_any_single_field_mutation_fails(registry, keys, mech, block, impl, key_index,
                                         field, noise):
    key = keys[key_index]
    trusted = [k.public for k in keys]
    proof = generate_proof(mech, registry.get(impl, "attest"), block, key)
    assert verify_proof(registry, trusted, proof) == proof.commitment_digest
    if field == "digest":
        bad = proof.mutated(commitment_digest=hashlib.sha256(proof.commitment_digest + noise).digest())
    elif field == "block":
        bad = proof.mutated(block_number=block + 1 + noise[0])
    elif field == "submitter":
        bad = proof.mutated(submitter=hashlib.sha256(proof.submitter + noise).digest()[:20])
    else:
        flipped = bytearray(proof.binding)
        flipped[noise[0] % len(flipped)] ^= 1 + (noise[-1] % 255)
        bad = proof.mutated(binding=bytes(flipped))
    with pytest.raises(ProofError):
        verify_proof(registry, trusted, bad)


def test_cost_models_golden():
    zk = default_cost_model(ProofMechanism.SUCCINCT)
    tee = default_cost_model(ProofMechanism.ATTESTED)
    assert (zk.proving_time_s, zk.regular_time_s, zk.verify_gas_avg, zk.mem_max_mb) == \
        (59, 15.14e-6, 289728, 2150)
    assert (tee.proving_time_s, tee.regular_time_s, tee.verify_gas_avg, tee.mem_avg_mb) == \
        (0.080, 1.42e-3, 5397746, 21)


def test_tee_overhead_factor_consistent_with_raw_times():
    tee = default_cost_model(ProofMechanism.ATTESTED)
    assert abs(tee.measured_overhead / tee.overhead_factor - 1) < 0.05


def test_zk_printed_overhead_recorded_not_recomputed():
    zk = default_cost_model(ProofMechanism.SUCCINCT)
    assert zk.overhead_factor == 39_333_333
    # the raw times give roughly 3.9e6, an order of magnitude below the printed factor
    assert 3.8e6 < zk.measured_overhead < 4.0e6


@pytest.mark.parametrize("mech", MECHS)
def test_gas_ordering(mech):
    c = default_cost_model(mech)
    assert c.verify_gas_min <= c.verify_gas_avg <= c.verify_gas_max
    assert c.verify_gas("min") == c.verify_gas_min
    with pytest.raises(ValueError):
        c.verify_gas("median")
