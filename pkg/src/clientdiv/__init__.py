"""Verifiable client diversity: code commitments, simulated execution proofs,
a minority-client reward contract, and an agent simulation of validators
responding to it."""

__version__ = "0.1.0"
