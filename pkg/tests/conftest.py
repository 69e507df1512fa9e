"""Shared generators for randomized property tests.

Everything takes an explicit numpy Generator so individual tests stay
reproducible; no global seeding.
"""

import numpy as np
import pytest

from semcond import HexGraph, Signature, compile_hex, hex_to_formula, ingest_hex
from semcond.logic import And, Const, Formula, Not, Or, Var, conj, disj


def random_hex(rng: np.random.Generator, n_max: int = 14, n_min: int = 2,
               p_hier: float = 0.25, p_excl: float = 0.15) -> HexGraph:
    """A random DAG (edges only i < j, so acyclic by construction) plus
    exclusions on pairs not already related by a direct hierarchy edge."""
    n = int(rng.integers(n_min, n_max + 1))
    names = [f"n{i}" for i in range(n)]
    hier = []
    for j in range(1, n):
        for i in range(j):
            if rng.random() < p_hier:
                hier.append((names[i], names[j]))
    taken = {(a, b) for a, b in hier}
    excl = []
    for j in range(1, n):
        for i in range(j):
            if (names[i], names[j]) in taken or (names[j], names[i]) in taken:
                continue
            if rng.random() < p_excl:
                excl.append((names[i], names[j]))
    return ingest_hex(names, hier, excl)


def random_satisfiable_hex(rng: np.random.Generator, **kw) -> HexGraph:
    """Rejection-sample until the graph admits at least one nonzero model.

    Any HEX graph is satisfied by the all-zero vector, so this only guards
    against degenerate single-model graphs when a test needs variety.
    """
    while True:
        h = random_hex(rng, **kw)
        if hex_to_formula(h).model_count() >= 2:
            return h


def random_formula_node(rng: np.random.Generator, k: int, depth: int = 3):
    """Random tree built through conj/disj, so it is already in the
    flattened normal form the parser produces."""
    roll = rng.random()
    if depth == 0 or roll < 0.35:
        v = Var(int(rng.integers(1, k + 1)))
        return Not(v) if rng.random() < 0.5 else v
    if roll < 0.4:
        return Const(bool(rng.integers(0, 2)))
    kids = [random_formula_node(rng, k, depth - 1)
            for _ in range(int(rng.integers(2, 4)))]
    return conj(kids) if rng.random() < 0.5 else disj(kids)


def random_formula(rng: np.random.Generator, k: int, depth: int = 3) -> Formula:
    return Formula(random_formula_node(rng, k, depth), Signature(k))


def random_raw_node(rng: np.random.Generator, k: int, depth: int = 3):
    """Like random_formula_node but with bare And/Or constructors, keeping
    redundant nesting; useful for testing normalization itself."""
    roll = rng.random()
    if depth == 0 or roll < 0.35:
        v = Var(int(rng.integers(1, k + 1)))
        return Not(v) if rng.random() < 0.5 else v
    if roll < 0.4:
        return Const(bool(rng.integers(0, 2)))
    kids = tuple(random_raw_node(rng, k, depth - 1)
                 for _ in range(int(rng.integers(2, 4))))
    return And(kids) if rng.random() < 0.5 else Or(kids)


def chain_hex(depth: int) -> HexGraph:
    names = [f"n{i}" for i in range(depth)]
    return ingest_hex(names, [(names[i], names[i + 1]) for i in range(depth - 1)], [])


@pytest.fixture(scope="session")
def animal_hex():
    """The bundled 6-label taxonomy: 7 consistent label vectors."""
    return ingest_hex(
        ["animal", "dog", "cat", "puppy", "adult_dog", "kitten"],
        [("animal", "dog"), ("animal", "cat"), ("dog", "puppy"),
         ("dog", "adult_dog"), ("cat", "kitten")],
        [("dog", "cat"), ("puppy", "adult_dog")],
    )


@pytest.fixture(scope="session")
def animal_compiled(animal_hex):
    return compile_hex(animal_hex)
