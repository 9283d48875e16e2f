from fractions import Fraction

import pytest

from app.services.errors import SolverError
from app.services.simplex import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    find_nonnegative_solution,
    solve_lp,
)


def dot(a, b):
    return sum((Fraction(x) * Fraction(y) for x, y in zip(a, b)), Fraction(0))


def column(A, j):
    return [row[j] for row in A]


def test_optimum_is_exact():
    # minimize x1 + x2 subject to x1 + 2 x2 = 3
    result = solve_lp([1, 1], [[1, 2]], [3])
    assert result.status == OPTIMAL
    assert result.objective == Fraction(3, 2)
    assert result.x == [0, Fraction(3, 2)]


def test_optimum_with_slacks():
    A = [[1, 1, 1, 0], [1, 3, 0, 1]]
    result = solve_lp([-1, -1, 0, 0], A, [4, 6])
    assert result.status == OPTIMAL
    assert result.objective == -4
    assert [dot(row, result.x) for row in A] == [4, 6]


def test_negative_right_hand_sides():
    result = solve_lp([1, 0], [[-1, 1]], [-2])
    assert result.status == OPTIMAL
    assert result.x == [2, 0]


def test_infeasible_system_returns_farkas_vector():
    A = [[1, 1], [1, 1]]
    b = [1, 2]
    result = find_nonnegative_solution(A, b)
    assert result.status == INFEASIBLE
    z = result.farkas
    assert all(dot(z, column(A, j)) >= 0 for j in range(2))
    assert dot(z, b) < 0


def test_unbounded_problem_returns_ray():
    A = [[1, -1]]
    c = [-1, 0]
    result = solve_lp(c, A, [1])
    assert result.status == UNBOUNDED
    ray = result.ray
    assert all(v >= 0 for v in ray)
    assert dot(A[0], ray) == 0
    assert dot(c, ray) < 0


def test_degenerate_problem_terminates():
    # a classic cycling example for the largest-coefficient rule
    A = [
        [Fraction(1, 2), Fraction(-11, 2), Fraction(-5, 2), 9, 1, 0, 0],
        [Fraction(1, 2), Fraction(-3, 2), Fraction(-1, 2), 1, 0, 1, 0],
        [1, 0, 0, 0, 0, 0, 1],
    ]
    result = solve_lp([-10, 57, 9, 24, 0, 0, 0], A, [0, 0, 1])
    assert result.status == OPTIMAL
    assert result.objective == -1


def test_pivot_guard():
    with pytest.raises(SolverError):
        solve_lp([-1, -1, 0, 0], [[1, 1, 1, 0], [1, 3, 0, 1]], [4, 6], max_pivots=0)
