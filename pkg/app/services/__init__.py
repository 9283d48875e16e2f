"""
Core services: divisor arithmetic, symmetry reduction, pullbacks, exact solvers and proof replay.
"""
