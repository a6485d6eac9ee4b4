"""Private, verifiable federated evaluation with zero-knowledge threshold proofs."""

__version__ = "0.1.0"
