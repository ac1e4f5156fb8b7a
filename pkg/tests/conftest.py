import random
from pathlib import Path

import pytest

from saflip.cnf import CnfFormula, EvalState

DATA_DIR = Path(__file__).parent / "data" / "instances"

PINNED = dict(t0=51.71, alpha=0.92, m_steps=50, mni=103)


def random_3cnf(n, m, rng, source_id="random"):
    """Uniform random 3-CNF: three distinct variables per clause, random signs."""
    clauses = []
    for _ in range(m):
        variables = rng.sample(range(1, n + 1), 3)
        clauses.append(tuple(v if rng.random() < 0.5 else -v for v in variables))
    return CnfFormula(num_vars=n, clauses=tuple(clauses), source_id=source_id)


def brute_force_unsat_count(formula, values):
    """From-scratch clause scan; the independent oracle for the incremental cache."""
    unsat = 0
    for clause in formula.clauses:
        if not any(
            values[lit - 1] if lit > 0 else not values[-lit - 1] for lit in clause
        ):
            unsat += 1
    return unsat


class AuditedState(EvalState):
    """EvalState that cross-checks every gain query against a full recount."""

    def __init__(self, formula, values):
        super().__init__(formula, values)
        self.gain_checks = 0
        self.unsat_trace = [self.unsat_count]

    def flip_gain(self, var):
        gain = super().flip_gain(var)
        before = brute_force_unsat_count(self.formula, self.values)
        flipped = self.values.copy()
        flipped[var - 1] ^= 1
        after = brute_force_unsat_count(self.formula, flipped)
        assert gain == before - after, f"incremental gain {gain} != oracle {before - after}"
        self.gain_checks += 1
        return gain

    def apply_flip(self, var):
        super().apply_flip(var)
        self.unsat_trace.append(self.unsat_count)


@pytest.fixture(scope="session")
def fixture_benchmarks():
    from saflip.harness import ingest_benchmarks

    return ingest_benchmarks(DATA_DIR)


@pytest.fixture
def tiny_formula():
    return CnfFormula(num_vars=3, clauses=((1, 2, 3), (-1, 2, 3)), source_id="tiny")
