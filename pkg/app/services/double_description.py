"""
Extreme rays of cones {x : A x >= 0} over the rationals, by cddlib's double
description method in exact fraction arithmetic.

Rays are reported modulo the lineality space: each one is projected onto the
orthogonal complement of the lines and scaled to a primitive integer vector.
"""

from fractions import Fraction
from math import gcd
from typing import List, Sequence, Tuple

import cdd

Vector = Tuple[Fraction, ...]


def _dot(a: Sequence[Fraction], x: Sequence[Fraction]) -> Fraction:
    return sum((ai * xi for ai, xi in zip(a, x) if ai and xi), Fraction(0))


def primitive(v: Sequence) -> Vector:
    """Scale to the integer vector with coprime entries, keeping the direction."""
    v = [Fraction(x) for x in v]
    denominators = 1
    for x in v:
        denominators = denominators * x.denominator // gcd(denominators, x.denominator)
    ints = [int(x * denominators) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    if g == 0:
        return tuple(Fraction(0) for _ in v)
    return tuple(Fraction(x, g) for x in ints)


def _oriented(v: Vector) -> Vector:
    """Lines have no preferred sign; make the first nonzero entry positive."""
    lead = next((x for x in v if x != 0), Fraction(0))
    return tuple(-x for x in v) if lead < 0 else v


def _orthogonal(lines: List[List[Fraction]]) -> List[List[Fraction]]:
    basis: List[List[Fraction]] = []
    for line in lines:
        v = list(line)
        for u in basis:
            c = _dot(v, u) / _dot(u, u)
            v = [x - c * y for x, y in zip(v, u)]
        if any(v):
            basis.append(v)
    return basis


def generators(A: Sequence[Sequence], dim: int) -> Tuple[List[List[Fraction]], List[List[Fraction]]]:
    """Raw cddlib V-representation of the cone: (rays, lines), apex dropped."""
    # cdd rows are [b, a_1, ..., a_d] meaning b + a.x >= 0
    rows = [[Fraction(0)] + [Fraction(v) for v in row] for row in A]
    if not rows:
        rows = [[Fraction(0)] * (dim + 1)]
    matrix = cdd.Matrix(rows, number_type='fraction')
    matrix.rep_type = cdd.RepType.INEQUALITY
    found = cdd.Polyhedron(matrix).get_generators()

    rays, lines = [], []
    for k in range(found.row_size):
        row = found[k]
        if row[0] != 0:
            continue
        v = [Fraction(x) for x in row[1:]]
        if not any(v):
            continue
        (lines if k in found.lin_set else rays).append(v)
    return rays, lines


def extreme_rays(A: Sequence[Sequence], dim: int) -> Tuple[List[Vector], List[Vector]]:
    """Extreme rays (modulo lineality) and a lineality basis of {x : A x >= 0}."""
    if dim == 0:
        return [], []
    raw_rays, raw_lines = generators(A, dim)
    lines = _orthogonal(raw_lines)

    rays: List[Vector] = []
    seen = set()
    for ray in raw_rays:
        for u in lines:
            c = _dot(ray, u) / _dot(u, u)
            ray = [x - c * y for x, y in zip(ray, u)]
        key = primitive(ray)
        if any(key) and key not in seen:
            seen.add(key)
            rays.append(key)
    return sorted(rays), sorted(_oriented(primitive(u)) for u in lines)
