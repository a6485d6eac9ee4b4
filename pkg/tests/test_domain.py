import random

import pytest

from zkpfedeval.zk.domain import (
    R,
    divide_by_vanishing,
    domain_size,
    intt,
    lagrange_at,
    ntt,
    poly_mul,
    root_of_unity,
)


def evaluate(coeffs, x):
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % R
    return acc


@pytest.mark.parametrize("m, n", [(0, 2), (1, 2), (2, 2), (3, 4), (37, 64), (64, 64)])
def test_domain_size(m, n):
    assert domain_size(m) == n


@pytest.mark.parametrize("n", [2, 8, 64, 2**32])
def test_root_of_unity_is_primitive(n):
    w = root_of_unity(n)
    assert pow(w, n, R) == 1
    assert pow(w, n // 2, R) == R - 1


def test_two_adicity():
    assert (R - 1) % 2**32 == 0 and ((R - 1) >> 32) % 2 == 1


@pytest.mark.parametrize("n", [2, 4, 16])
def test_ntt_against_naive_evaluation(n):
    rng = random.Random(n)
    a = [rng.randrange(R) for _ in range(n)]
    w = root_of_unity(n)
    assert ntt(a, w) == [evaluate(a, pow(w, i, R)) for i in range(n)]
    assert intt(ntt(a, w), w) == a


def test_lagrange_basis_interpolates():
    rng = random.Random(1)
    n = 8
    w = root_of_unity(n)
    coeffs = [rng.randrange(R) for _ in range(n)]
    values = [evaluate(coeffs, pow(w, i, R)) for i in range(n)]
    tau = rng.randrange(R)
    ls = lagrange_at(tau, n)
    assert sum(v * l for v, l in zip(values, ls)) % R == evaluate(coeffs, tau)


def test_lagrange_rejects_domain_point():
    with pytest.raises(ValueError):
        lagrange_at(root_of_unity(4), 4)


def test_divide_by_vanishing():
    rng = random.Random(2)
    n = 8
    q = [rng.randrange(R) for _ in range(n - 1)]
    zh = [R - 1] + [0] * (n - 1) + [1]
    assert divide_by_vanishing(poly_mul(q, zh), n) == q
    bad = poly_mul(q, zh)
    bad[0] = (bad[0] + 1) % R
    with pytest.raises(ValueError):
        divide_by_vanishing(bad, n)
