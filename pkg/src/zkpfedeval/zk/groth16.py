"""Groth16 over BLS12-381.

Group arithmetic comes from a curve kernel module (native or pure Python,
see :mod:`zkpfedeval.curve`); the QAP reduction, key generation, prover and
verifier live here.
"""

from __future__ import annotations

import random
import secrets
import struct
from dataclasses import dataclass
from types import ModuleType

from .. import curve
from ..errors import KeyMismatchError, UnsatisfiableError
from ..r1cs import ConstraintSystem, is_satisfied, Assignment
from . import domain
from .keys import (
    GROTH16_ID,
    Proof,
    ProvingKey,
    Reader,
    VerifyingKey,
    pack_header,
    unpack_header,
)

R = domain.R


@dataclass
class _VkBody:
    alpha_g1: object
    beta_g2: object
    gamma_g2: object
    delta_g2: object
    ic: list
    neg_alpha_g1: object = None

    def __post_init__(self):
        if self.neg_alpha_g1 is None:
            self.neg_alpha_g1 = -self.alpha_g1


@dataclass
class _PkBody:
    alpha_g1: object
    beta_g1: object
    beta_g2: object
    delta_g1: object
    delta_g2: object
    a_query: list
    b_g1_query: list
    b_g2_query: list
    l_query: list
    h_query: list
    domain_size: int


def _rng(seed):
    return random.Random(seed) if seed is not None else secrets.SystemRandom()


def _nonzero(rng) -> int:
    return rng.randrange(1, R)


def qap_at(cs: ConstraintSystem, tau: int):
    """Evaluate every variable's A/B/C interpolating polynomial at ``tau``."""
    rows = cs.rows()
    n = domain.domain_size(len(rows))
    lag = domain.lagrange_at(tau, n)
    nv = cs.num_variables
    u, v, w = [0] * nv, [0] * nv, [0] * nv
    for k, (a, b, c) in enumerate(rows):
        for col, coeff in a:
            u[col] = (u[col] + coeff * lag[k]) % R
        for col, coeff in b:
            v[col] = (v[col] + coeff * lag[k]) % R
        for col, coeff in c:
            w[col] = (w[col] + coeff * lag[k]) % R
    return u, v, w, n


def quotient(cs: ConstraintSystem, z: list) -> list:
    """Coefficients of ``(A(x)B(x) - C(x)) / (x^n - 1)`` for assignment ``z``."""
    rows = cs.rows()
    n = domain.domain_size(len(rows))
    ev = [[0] * n for _ in range(3)]
    for k, row in enumerate(rows):
        for which, terms in enumerate(row):
            ev[which][k] = sum(z[col] * coeff for col, coeff in terms) % R
    omega = domain.root_of_unity(n)
    a, b, c = (domain.intt(e, omega) for e in ev)
    p = domain.poly_mul(a, b)
    for i, x in enumerate(c):
        p[i] -= x
    return domain.divide_by_vanishing(p, n)


class Groth16Backend:
    id = GROTH16_ID
    name = "snark"
    secure = True

    def __init__(self, kernel: ModuleType | None = None):
        self.kernel = kernel or curve.kernel

    # key generation ------------------------------------------------------

    def setup(self, cs: ConstraintSystem, rng_seed=None):
        if cs.modulus != R:
            raise ValueError("Groth16 backend requires the BLS12-381 scalar field")
        k = self.kernel
        rng = _rng(rng_seed)
        while True:
            tau = _nonzero(rng)
            try:
                u, v, w, n = qap_at(cs, tau)
                break
            except ValueError:
                continue
        alpha, beta, gamma, delta = (_nonzero(rng) for _ in range(4))
        gamma_inv = pow(gamma, R - 2, R)
        delta_inv = pow(delta, R - 2, R)
        g1, g2 = k.G1.generator(), k.G2.generator()
        npub = 1 + cs.num_public

        mixed = [(beta * u[i] + alpha * v[i] + w[i]) % R for i in range(cs.num_variables)]
        zt = (pow(tau, n, R) - 1) % R
        h_scalars = []
        acc = zt * delta_inv % R
        for _ in range(n - 1):
            h_scalars.append(acc)
            acc = acc * tau % R

        g1_scalars = (
            [alpha, beta, delta]
            + u
            + v
            + [m * gamma_inv % R for m in mixed[:npub]]
            + [m * delta_inv % R for m in mixed[npub:]]
            + h_scalars
        )
        g1_pts = k.g1_batch_mul(g1, g1_scalars)
        alpha_g1, beta_g1, delta_g1 = g1_pts[:3]
        nv = cs.num_variables
        pos = 3
        a_query = g1_pts[pos : pos + nv]
        pos += nv
        b_g1 = g1_pts[pos : pos + nv]
        pos += nv
        ic = g1_pts[pos : pos + npub]
        pos += npub
        l_query = g1_pts[pos : pos + nv - npub]
        pos += nv - npub
        h_query = g1_pts[pos:]

        g2_pts = k.g2_batch_mul(g2, [beta, gamma, delta] + v)
        beta_g2, gamma_g2, delta_g2 = g2_pts[:3]
        b_g2 = g2_pts[3:]

        digest = cs.digest()
        pk = ProvingKey(
            GROTH16_ID,
            digest,
            cs,
            _PkBody(alpha_g1, beta_g1, beta_g2, delta_g1, delta_g2, a_query, b_g1, b_g2, l_query, h_query, n),
        )
        vk = VerifyingKey(GROTH16_ID, digest, _VkBody(alpha_g1, beta_g2, gamma_g2, delta_g2, ic), cs)
        return pk, vk

    # proving ---------------------------------------------------------------

    def prove(self, pk: ProvingKey, public_inputs, assignment: Assignment, rng_seed=None) -> Proof:
        if pk.backend_id != self.id:
            raise KeyMismatchError(f"proving key is for backend {pk.backend_id}")
        if assignment.circuit_digest is not None and assignment.circuit_digest != pk.circuit_digest:
            raise KeyMismatchError("assignment was built for a different circuit")
        cs = pk.cs
        stmt = Assignment(list(public_inputs), list(assignment.private_values))
        z = cs.full_vector(stmt)
        if not is_satisfied(cs, stmt):
            raise UnsatisfiableError("assignment does not satisfy the circuit")
        k = self.kernel
        body: _PkBody = pk.body
        rng = _rng(rng_seed)
        r, s = _nonzero(rng), _nonzero(rng)
        npub = 1 + cs.num_public

        a = body.alpha_g1 + k.g1_msm(body.a_query, z) + body.delta_g1 * r
        b2 = body.beta_g2 + k.g2_msm(body.b_g2_query, z) + body.delta_g2 * s
        b1 = body.beta_g1 + k.g1_msm(body.b_g1_query, z) + body.delta_g1 * s
        h = quotient(cs, z)
        c = (
            k.g1_msm(body.l_query + body.h_query, z[npub:] + h)
            + a * s
            + b1 * r
            - body.delta_g1 * (r * s % R)
        )
        return Proof(GROTH16_ID, a.to_bytes() + b2.to_bytes() + c.to_bytes())

    # verification ------------------------------------------------------------

    def decode_proof(self, proof: Proof):
        k = self.kernel
        data = proof.data
        if len(data) != 48 + 96 + 48:
            raise ValueError("bad proof length")
        return k.G1.from_bytes(data[:48]), k.G2.from_bytes(data[48:144]), k.G1.from_bytes(data[144:])

    def verify(self, vk: VerifyingKey, public_inputs, proof: Proof) -> bool:
        if vk.backend_id != self.id or proof.backend_id != self.id:
            return False
        body: _VkBody = vk.body
        xs = list(public_inputs)
        if len(xs) != len(body.ic) - 1:
            return False
        if any(not isinstance(x, int) or not 0 <= x < R for x in xs):
            return False
        try:
            a, b, c = self.decode_proof(proof)
        except ValueError:
            return False
        k = self.kernel
        ic = body.ic[0] + k.g1_msm(body.ic[1:], xs)
        return bool(
            k.pairing_check(
                [a, body.neg_alpha_g1, -ic, -c],
                [b, body.beta_g2, body.gamma_g2, body.delta_g2],
            )
        )

    # key files -------------------------------------------------------------------

    @staticmethod
    def _points(pts) -> bytes:
        return struct.pack(">I", len(pts)) + b"".join(p.to_bytes() for p in pts)

    def _read_points(self, rd: Reader, cls, validate) -> list:
        n = rd.u32()
        return [cls.from_bytes(rd.take(cls.ENCODED_LEN), validate) for _ in range(n)]

    def vk_to_bytes(self, vk: VerifyingKey) -> bytes:
        b: _VkBody = vk.body
        return (
            pack_header(self.id, vk.circuit_digest)
            + vk.circuit_digest
            + b.alpha_g1.to_bytes()
            + b.beta_g2.to_bytes()
            + b.gamma_g2.to_bytes()
            + b.delta_g2.to_bytes()
            + self._points(b.ic)
        )

    def vk_from_bytes(self, raw: bytes, cs: ConstraintSystem) -> VerifyingKey:
        digest = cs.digest()
        rd = Reader(unpack_header(raw, self.id, digest))
        if rd.take(32) != digest:
            raise KeyMismatchError("verifying key belongs to a different circuit")
        k = self.kernel
        alpha = k.G1.from_bytes(rd.take(48))
        beta, gamma, delta = (k.G2.from_bytes(rd.take(96)) for _ in range(3))
        ic = self._read_points(rd, k.G1, True)
        rd.done()
        return VerifyingKey(self.id, digest, _VkBody(alpha, beta, gamma, delta, ic), cs)

    def pk_to_bytes(self, pk: ProvingKey) -> bytes:
        b: _PkBody = pk.body
        return (
            pack_header(self.id, pk.circuit_digest)
            + pk.circuit_digest
            + struct.pack(">I", b.domain_size)
            + b"".join(p.to_bytes() for p in (b.alpha_g1, b.beta_g1))
            + b.beta_g2.to_bytes()
            + b.delta_g1.to_bytes()
            + b.delta_g2.to_bytes()
            + self._points(b.a_query)
            + self._points(b.b_g1_query)
            + self._points(b.b_g2_query)
            + self._points(b.l_query)
            + self._points(b.h_query)
        )

    def pk_from_bytes(self, raw: bytes, cs: ConstraintSystem, validate=False) -> ProvingKey:
        """Proving keys come from the local cache, so subgroup checks are
        skipped unless asked for."""
        digest = cs.digest()
        rd = Reader(unpack_header(raw, self.id, digest))
        if rd.take(32) != digest:
            raise KeyMismatchError("proving key belongs to a different circuit")
        k = self.kernel
        n = rd.u32()
        alpha = k.G1.from_bytes(rd.take(48), validate)
        beta1 = k.G1.from_bytes(rd.take(48), validate)
        beta2 = k.G2.from_bytes(rd.take(96), validate)
        delta1 = k.G1.from_bytes(rd.take(48), validate)
        delta2 = k.G2.from_bytes(rd.take(96), validate)
        a_q = self._read_points(rd, k.G1, validate)
        b1_q = self._read_points(rd, k.G1, validate)
        b2_q = self._read_points(rd, k.G2, validate)
        l_q = self._read_points(rd, k.G1, validate)
        h_q = self._read_points(rd, k.G1, validate)
        rd.done()
        return ProvingKey(
            self.id, digest, cs, _PkBody(alpha, beta1, beta2, delta1, delta2, a_q, b1_q, b2_q, l_q, h_q, n)
        )
