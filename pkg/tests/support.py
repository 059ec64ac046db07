"""Independent oracles used by the tests.

Everything here is deliberately written from first principles — trial
division, the textbook chord-and-tangent formulas, square-and-multiply —
so that the package's own group arithmetic is checked against code that
shares none of its internals.
"""

from __future__ import annotations


def is_prime_trial_division(m: int) -> bool:
    if m < 2:
        return False
    d = 2
    while d * d <= m:
        if m % d == 0:
            return False
        d += 1
    return True


def naive_on_curve(P, ell: int) -> bool:
    if P is None:
        return True
    x, y = P
    return (y * y - (x * x * x + x)) % ell == 0


def naive_add(P, Q, ell: int):
    """Chord-and-tangent addition on y^2 = x^3 + x over F_ell."""
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2 and (y1 + y2) % ell == 0:
        return None
    if P == Q:
        lam = (3 * x1 * x1 + 1) * pow(2 * y1, ell - 2, ell) % ell
    else:
        lam = (y2 - y1) * pow(x2 - x1, ell - 2, ell) % ell
    x3 = (lam * lam - x1 - x2) % ell
    y3 = (lam * (x1 - x3) - y1) % ell
    return (x3, y3)


def naive_mul(k: int, P, ell: int):
    """Scalar multiple by repeated doubling (handles negative k)."""
    if k < 0:
        return naive_mul(-k, naive_neg(P, ell), ell)
    acc = None
    addend = P
    while k:
        if k & 1:
            acc = naive_add(acc, addend, ell)
        addend = naive_add(addend, addend, ell)
        k >>= 1
    return acc


def naive_neg(P, ell: int):
    if P is None:
        return None
    x, y = P
    return (x, (-y) % ell)


def naive_order(P, ell: int, bound: int) -> int:
    """Order of P by brute force, up to ``bound`` additions."""
    acc = P
    for m in range(1, bound + 1):
        if acc is None:
            return m
        acc = naive_add(acc, P, ell)
    raise AssertionError(f"order of {P} exceeds {bound}")


def all_curve_points(ell: int):
    """Every point of y^2 = x^3 + x over F_ell, identity included."""
    points = [None]
    for x in range(ell):
        rhs = (x * x * x + x) % ell
        for y in range(ell):
            if (y * y) % ell == rhs:
                points.append((x, y))
    return points
