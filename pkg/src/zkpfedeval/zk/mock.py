"""Non-cryptographic stand-in backend for fast pipeline tests.

A mock "proof" is a SHA-256 commitment to the private assignment followed by
the assignment itself; verification re-runs :func:`is_satisfied`. It hides
nothing and must never be used where zero knowledge matters.
"""

from __future__ import annotations

import hashlib
import struct

from ..errors import KeyMismatchError, UnsatisfiableError
from ..r1cs import Assignment, ConstraintSystem, is_satisfied
from .keys import MOCK_ID, Proof, ProvingKey, Reader, VerifyingKey, pack_header, unpack_header


def _commit(values) -> bytes:
    return hashlib.sha256(b"".join(v.to_bytes(32, "big") for v in values)).digest()


class MockBackend:
    id = MOCK_ID
    name = "mock"
    secure = False

    def setup(self, cs: ConstraintSystem, rng_seed=None):
        digest = cs.digest()
        return ProvingKey(MOCK_ID, digest, cs, None), VerifyingKey(MOCK_ID, digest, None, cs)

    def prove(self, pk: ProvingKey, public_inputs, assignment: Assignment, rng_seed=None) -> Proof:
        if pk.backend_id != self.id:
            raise KeyMismatchError(f"proving key is for backend {pk.backend_id}")
        if assignment.circuit_digest is not None and assignment.circuit_digest != pk.circuit_digest:
            raise KeyMismatchError("assignment was built for a different circuit")
        stmt = Assignment(list(public_inputs), list(assignment.private_values))
        pk.cs.full_vector(stmt)
        if not is_satisfied(pk.cs, stmt):
            raise UnsatisfiableError("assignment does not satisfy the circuit")
        priv = [v % pk.cs.modulus for v in assignment.private_values]
        data = _commit(priv) + struct.pack(">I", len(priv)) + b"".join(v.to_bytes(32, "big") for v in priv)
        return Proof(MOCK_ID, data)

    def verify(self, vk: VerifyingKey, public_inputs, proof: Proof) -> bool:
        if vk.backend_id != self.id or proof.backend_id != self.id:
            return False
        cs = vk.cs
        try:
            rd = Reader(proof.data)
            commitment = rd.take(32)
            n = rd.u32()
            if n != cs.num_private:
                return False
            priv = [int.from_bytes(rd.take(32), "big") for _ in range(n)]
            rd.done()
        except ValueError:
            return False
        if _commit(priv) != commitment:
            return False
        xs = list(public_inputs)
        if len(xs) != cs.num_public or any(not isinstance(x, int) or not 0 <= x < cs.modulus for x in xs):
            return False
        if any(not 0 <= v < cs.modulus for v in priv):
            return False
        return is_satisfied(cs, Assignment(xs, priv))

    def vk_to_bytes(self, vk: VerifyingKey) -> bytes:
        return pack_header(self.id, vk.circuit_digest) + vk.circuit_digest

    def pk_to_bytes(self, pk: ProvingKey) -> bytes:
        return pack_header(self.id, pk.circuit_digest) + pk.circuit_digest

    def vk_from_bytes(self, raw: bytes, cs: ConstraintSystem) -> VerifyingKey:
        digest = cs.digest()
        if unpack_header(raw, self.id, digest) != digest:
            raise KeyMismatchError("verifying key belongs to a different circuit")
        return VerifyingKey(self.id, digest, None, cs)

    def pk_from_bytes(self, raw: bytes, cs: ConstraintSystem, validate=False) -> ProvingKey:
        digest = cs.digest()
        if unpack_header(raw, self.id, digest) != digest:
            raise KeyMismatchError("proving key belongs to a different circuit")
        return ProvingKey(self.id, digest, cs, None)
