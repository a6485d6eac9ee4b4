"""Pure-Python BLS12-381 kernel on top of py_ecc.

Mirrors the API of the compiled ``_curve_native`` module exactly, including the
zcash compressed point encoding, so either kernel can produce or consume keys
and proofs written by the other.
"""

from __future__ import annotations

from py_ecc import optimized_bls12_381 as bls
from py_ecc.bls.point_compression import (
    compress_G1,
    compress_G2,
    decompress_G1,
    decompress_G2,
)
from py_ecc.fields import optimized_bls12_381_FQ12 as FQ12

SCALAR_MODULUS = bls.curve_order


class _Point:
    __slots__ = ("p",)
    _zero = None
    _gen = None
    _b = None
    ENCODED_LEN = 0

    def __init__(self, p):
        self.p = p

    @classmethod
    def generator(cls):
        return cls(cls._gen)

    @classmethod
    def identity(cls):
        return cls(cls._zero)

    def is_identity(self):
        return bls.is_inf(self.p)

    def __add__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return type(self)(bls.add(self.p, other.p))

    def __sub__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return type(self)(bls.add(self.p, bls.neg(other.p)))

    def __neg__(self):
        return type(self)(bls.neg(self.p))

    def __mul__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            raise OverflowError("scalar must be nonnegative")
        k %= SCALAR_MODULUS
        if k == 0:
            return type(self).identity()
        return type(self)(bls.multiply(self.p, k))

    __rmul__ = __mul__

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return bls.eq(self.p, other.p)

    def __hash__(self):
        return hash(self.to_bytes())

    def __repr__(self):
        return f"{type(self).__name__}({self.to_bytes()[:8].hex()}...)"

    @classmethod
    def _check_subgroup(cls, pt):
        if not bls.is_inf(bls.multiply(pt, SCALAR_MODULUS)):
            raise ValueError("invalid point: not in the prime-order subgroup")


class G1(_Point):
    __slots__ = ()
    _zero = bls.Z1
    _gen = bls.G1
    ENCODED_LEN = 48

    def to_bytes(self):
        return int(compress_G1(self.p)).to_bytes(48, "big")

    @classmethod
    def from_bytes(cls, data, validate=True):
        data = bytes(data)
        if len(data) != 48:
            raise ValueError("bad point encoding length")
        pt = decompress_G1(int.from_bytes(data, "big"))
        if validate:
            cls._check_subgroup(pt)
        return cls(pt)


class G2(_Point):
    __slots__ = ()
    _zero = bls.Z2
    _gen = bls.G2
    ENCODED_LEN = 96

    def to_bytes(self):
        z1, z2 = compress_G2(self.p)
        return int(z1).to_bytes(48, "big") + int(z2).to_bytes(48, "big")

    @classmethod
    def from_bytes(cls, data, validate=True):
        data = bytes(data)
        if len(data) != 96:
            raise ValueError("bad point encoding length")
        z1 = int.from_bytes(data[:48], "big")
        z2 = int.from_bytes(data[48:], "big")
        # py_ecc ignores the flag bits of the second half; zcash requires them clear
        if z2 >> 381:
            raise ValueError("invalid point: flag bits set in second coordinate")
        pt = decompress_G2((z1, z2))
        if validate:
            cls._check_subgroup(pt)
        return cls(pt)


def _msm(cls, points, scalars):
    if len(points) != len(scalars):
        raise ValueError("points and scalars differ in length")
    acc = cls._zero
    for pt, k in zip(points, scalars):
        k %= SCALAR_MODULUS
        if k:
            acc = bls.add(acc, bls.multiply(pt.p, k))
    return cls(acc)


def g1_msm(points, scalars):
    return _msm(G1, points, scalars)


def g2_msm(points, scalars):
    return _msm(G2, points, scalars)


def g1_batch_mul(base, scalars):
    return [base * k for k in scalars]


def g2_batch_mul(base, scalars):
    return [base * k for k in scalars]


def pairing_check(g1, g2):
    """True iff the product of e(g1[i], g2[i]) is the identity of GT."""
    if len(g1) != len(g2):
        raise ValueError("g1 and g2 differ in length")
    acc = FQ12.one()
    for a, b in zip(g1, g2):
        if a.is_identity() or b.is_identity():
            continue
        acc = acc * bls.pairing(b.p, a.p, final_exponentiate=False)
    return bls.final_exponentiate(acc) == FQ12.one()
