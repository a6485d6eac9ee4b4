"""Rank-1 constraint systems and the gadgets behind the threshold circuit.

A constraint ``(A, B, C)`` holds when ``<A,z> * <B,z> == <C,z>`` over the
field, where ``z = (1, public..., private...)``. Private variables may carry
a *hint*, a function that computes their witness value from values assigned
earlier; this is how gadgets attach witness generation to the constraints
they emit.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from typing import Callable, Iterable, Union

from .errors import BuildError, ShapeError, UnsatisfiableError

# BLS12-381 scalar field; the Groth16 backend works over this prime.
BLS12_381_R = 0x73EDA753299D7D483339D80809A1D80553BDA402FFFE5BFEFFFFFFFF00000001


@dataclass(frozen=True)
class Variable:
    """``kind`` is "one", "public" or "private".

    Public variables are numbered from 1 (slot 0 is the constant one);
    private variables are numbered from 0 within their own category.
    """

    kind: str
    index: int

    def lc(self) -> "LinearCombination":
        return LinearCombination({self: 1})

    def __add__(self, other):
        return self.lc() + other

    __radd__ = __add__

    def __sub__(self, other):
        return self.lc() - other

    def __rsub__(self, other):
        return LinearCombination.of(other) - self.lc()

    def __mul__(self, k):
        return self.lc() * k

    __rmul__ = __mul__

    def __neg__(self):
        return self.lc() * -1


ONE = Variable("one", 0)

Term = Union["LinearCombination", Variable, int]


class LinearCombination:
    """Sparse integer combination of variables. Coefficients are reduced
    modulo the field only when the system is evaluated or serialized."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms: dict[Variable, int] = dict(terms or {})

    @classmethod
    def of(cls, x: Term) -> "LinearCombination":
        if isinstance(x, LinearCombination):
            return x
        if isinstance(x, Variable):
            return x.lc()
        if isinstance(x, int):
            return cls({ONE: x}) if x else cls()
        raise TypeError(f"cannot build a linear combination from {type(x).__name__}")

    def __add__(self, other):
        out = dict(self.terms)
        for v, c in LinearCombination.of(other).terms.items():
            out[v] = out.get(v, 0) + c
        return LinearCombination(out)

    __radd__ = __add__

    def __sub__(self, other):
        return self + LinearCombination.of(other) * -1

    def __rsub__(self, other):
        return LinearCombination.of(other) - self

    def __mul__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        return LinearCombination({v: c * k for v, c in self.terms.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __repr__(self):
        parts = [f"{c}*{v.kind}[{v.index}]" for v, c in self.terms.items()]
        return "LC(" + " + ".join(parts) + ")"


@dataclass
class Assignment:
    public_values: list
    private_values: list
    circuit_digest: bytes | None = None


@dataclass
class _Private:
    name: str | None
    hint: Callable | None


@dataclass
class ConstraintSystem:
    modulus: int = BLS12_381_R
    public_names: list = field(default_factory=list)
    privates: list = field(default_factory=list)
    constraints: list = field(default_factory=list)

    @property
    def num_public(self) -> int:
        return len(self.public_names)

    @property
    def num_private(self) -> int:
        return len(self.privates)

    @property
    def num_variables(self) -> int:
        """Length of the full assignment vector, constant one included."""
        return 1 + self.num_public + self.num_private

    def alloc_public(self, name=None) -> Variable:
        self.public_names.append(name)
        return Variable("public", self.num_public)

    def alloc_private(self, name=None, hint=None) -> Variable:
        self.privates.append(_Private(name, hint))
        return Variable("private", self.num_private - 1)

    def _check(self, lc: LinearCombination):
        for v in lc.terms:
            if v.kind == "one" and v.index == 0:
                continue
            if v.kind == "public" and 1 <= v.index <= self.num_public:
                continue
            if v.kind == "private" and 0 <= v.index < self.num_private:
                continue
            raise BuildError(f"variable {v} was not allocated in this system")

    def enforce(self, a: Term, b: Term, c: Term):
        row = tuple(LinearCombination.of(x) for x in (a, b, c))
        for lc in row:
            self._check(lc)
        self.constraints.append(row)

    def column(self, v: Variable) -> int:
        if v.kind == "one":
            return 0
        if v.kind == "public":
            return v.index
        return 1 + self.num_public + v.index

    def rows(self) -> list:
        """Constraints as ``(A, B, C)`` lists of sorted ``(column, coeff)``
        pairs with reduced, nonzero coefficients."""
        p = self.modulus
        out = []
        for row in self.constraints:
            packed = []
            for lc in row:
                acc: dict[int, int] = {}
                for v, c in lc.terms.items():
                    col = self.column(v)
                    acc[col] = (acc.get(col, 0) + c) % p
                packed.append(sorted((k, c) for k, c in acc.items() if c))
            out.append(tuple(packed))
        return out

    def to_bytes(self) -> bytes:
        """Canonical byte form: modulus, counts, then every constraint as
        three sorted sparse vectors."""
        buf = bytearray(b"R1CS")
        buf += self.modulus.to_bytes(32, "big")
        buf += struct.pack(">III", self.num_public, self.num_private, len(self.constraints))
        for row in self.rows():
            for terms in row:
                buf += struct.pack(">I", len(terms))
                for col, c in terms:
                    buf += struct.pack(">I", col) + c.to_bytes(32, "big")
        return bytes(buf)

    def digest(self) -> bytes:
        return hashlib.sha256(self.to_bytes()).digest()

    def full_vector(self, assignment: Assignment) -> list:
        if (
            len(assignment.public_values) != self.num_public
            or len(assignment.private_values) != self.num_private
        ):
            raise ShapeError(
                f"assignment has {len(assignment.public_values)} public / "
                f"{len(assignment.private_values)} private values, system expects "
                f"{self.num_public} / {self.num_private}"
            )
        p = self.modulus
        return [1] + [x % p for x in assignment.public_values] + [
            x % p for x in assignment.private_values
        ]

    def generate_witness(self, public_values: Iterable[int], inputs=None) -> Assignment:
        """Fill every private variable from ``inputs`` or from its hint.

        Hints raise :class:`UnsatisfiableError` when the statement cannot hold.
        """
        p = self.modulus
        inputs = inputs or {}
        public = [x % p for x in public_values]
        if len(public) != self.num_public:
            raise ShapeError(f"expected {self.num_public} public values, got {len(public)}")
        private: list = []

        def value(x: Term) -> int:
            total = 0
            for v, c in LinearCombination.of(x).terms.items():
                if v.kind == "one":
                    total += c
                elif v.kind == "public":
                    total += c * public[v.index - 1]
                else:
                    if v.index >= len(private):
                        raise BuildError(f"hint reads {v} before it is assigned")
                    total += c * private[v.index]
            return total % p

        for i, var in enumerate(self.privates):
            key = Variable("private", i)
            if key in inputs:
                private.append(inputs[key] % p)
            elif var.hint is not None:
                private.append(var.hint(value) % p)
            else:
                raise BuildError(f"no value or hint for private variable {i} ({var.name})")
        return Assignment(public, private, self.digest())


def is_satisfied(cs: ConstraintSystem, assignment: Assignment) -> bool:
    z = cs.full_vector(assignment)
    p = cs.modulus
    for a, b, c in cs.rows():
        av = sum(z[i] * k for i, k in a) % p
        bv = sum(z[i] * k for i, k in b) % p
        cv = sum(z[i] * k for i, k in c) % p
        if av * bv % p != cv:
            return False
    return True


def bit_decompose(cs: ConstraintSystem, v: Term, n: int) -> list:
    """Allocate ``n`` little-endian bits of ``v`` with booleanity constraints
    and one packing constraint ``sum(b_i * 2^i) == v``."""
    v = LinearCombination.of(v)

    def bit_hint(i):
        def hint(value):
            x = value(v)
            if x >> n:
                raise UnsatisfiableError(f"value does not fit in {n} bits")
            return (x >> i) & 1

        return hint

    bits = [cs.alloc_private(f"bit{i}", hint=bit_hint(i)) for i in range(n)]
    for b in bits:
        cs.enforce(b, b, b)
    packed = LinearCombination()
    for i, b in enumerate(bits):
        packed = packed + b * (1 << i)
    cs.enforce(packed, ONE, v)
    return bits


def assert_strict_less(cs: ConstraintSystem, a: Term, b: Term, n: int) -> list:
    """Constrain ``a < b`` for values below ``2^n``.

    The slack ``d = b - a - 1`` is kept as a linear combination and
    bit-decomposed directly, so it fits in ``n`` bits exactly when ``a < b``.
    """
    if (n + 1) >= cs.modulus.bit_length():
        raise BuildError(f"width {n} too large for a {cs.modulus.bit_length()}-bit field")
    slack = LinearCombination.of(b) - a - 1
    return bit_decompose(cs, slack, n)


LOSS_BITS = 32
PUBLIC_ORDER = ("h_lo", "h_hi", "t", "nonce")


@dataclass
class ThresholdCircuit:
    cs: ConstraintSystem
    publics: tuple
    loss: Variable
    width: int

    def witness(self, loss_raw: int, public_inputs) -> Assignment:
        """Assignment for ``loss_raw`` against public ``[h_lo, h_hi, t, nonce]``.

        Raises :class:`UnsatisfiableError` when ``loss_raw >= t``.
        """
        public_inputs = list(public_inputs)
        t = public_inputs[2]
        if loss_raw >= t:
            raise UnsatisfiableError(f"loss {loss_raw} is not below threshold {t}")
        return self.cs.generate_witness(public_inputs, {self.loss: loss_raw})


def synthesize_threshold_circuit(width: int = LOSS_BITS, modulus: int = BLS12_381_R) -> ThresholdCircuit:
    cs = ConstraintSystem(modulus)
    publics = tuple(cs.alloc_public(name) for name in PUBLIC_ORDER)
    loss = cs.alloc_private("loss")
    assert_strict_less(cs, loss, publics[2], width)
    # every public input must occur in the constraint matrices to be bound
    for v in publics:
        cs.enforce(v, ONE, v)
    return ThresholdCircuit(cs, publics, loss, width)
