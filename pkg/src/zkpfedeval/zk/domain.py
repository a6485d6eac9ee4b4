"""Radix-2 evaluation domains over the BLS12-381 scalar field."""

from __future__ import annotations

from ..r1cs import BLS12_381_R

R = BLS12_381_R
MULTIPLICATIVE_GENERATOR = 7
TWO_ADICITY = 32


def domain_size(m: int) -> int:
    n = 1
    while n < max(m, 2):
        n <<= 1
    if n > 1 << TWO_ADICITY:
        raise ValueError(f"no radix-2 domain of size {n}")
    return n


def root_of_unity(n: int) -> int:
    """Primitive ``n``-th root of unity for ``n`` a power of two."""
    return pow(MULTIPLICATIVE_GENERATOR, (R - 1) // n, R)


def _bit_reverse(a: list) -> list:
    n = len(a)
    shift = n.bit_length() - 1
    out = [0] * n
    for i, x in enumerate(a):
        j = int(format(i, f"0{shift}b")[::-1], 2) if shift else 0
        out[j] = x
    return out


def ntt(a: list, omega: int) -> list:
    """Evaluate coefficient vector ``a`` at powers of ``omega``."""
    n = len(a)
    a = _bit_reverse([x % R for x in a])
    size = 2
    while size <= n:
        w_step = pow(omega, n // size, R)
        half = size // 2
        for start in range(0, n, size):
            w = 1
            for k in range(start, start + half):
                u, v = a[k], a[k + half] * w % R
                a[k] = (u + v) % R
                a[k + half] = (u - v) % R
                w = w * w_step % R
        size <<= 1
    return a


def intt(values: list, omega: int) -> list:
    n = len(values)
    out = ntt(values, pow(omega, R - 2, R))
    n_inv = pow(n, R - 2, R)
    return [x * n_inv % R for x in out]


def lagrange_at(tau: int, n: int) -> list:
    """Values ``L_k(tau)`` of the Lagrange basis over ``{omega^k}``."""
    omega = root_of_unity(n)
    z = (pow(tau, n, R) - 1) % R
    if z == 0:
        raise ValueError("evaluation point lies in the domain")
    scale = z * pow(n, R - 2, R) % R
    out = []
    w = 1
    for _ in range(n):
        out.append(scale * w % R * pow((tau - w) % R, R - 2, R) % R)
        w = w * omega % R
    return out


def poly_mul(a: list, b: list) -> list:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return [x % R for x in out]


def divide_by_vanishing(p: list, n: int) -> list:
    """Quotient of ``p`` by ``x^n - 1``; raises if the remainder is nonzero."""
    p = [x % R for x in p] + [0] * max(0, 2 * n - len(p))
    q = [p[j + n] for j in range(n - 1)]
    # p = q*x^n - q, so the low n coefficients must equal -q
    for j in range(n):
        expect = (-(q[j] if j < n - 1 else 0)) % R
        if p[j] != expect:
            raise ValueError("polynomial is not divisible by the vanishing polynomial")
    return q
