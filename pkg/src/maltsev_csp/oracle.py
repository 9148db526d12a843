"""Exhaustive ground truth and seeded instance generators."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import combinations, permutations, product

from .algebra import (
    OperationTable,
    affine_op,
    closure_binary,
    closure_unary,
    group_maltsev_op,
    is_minority,
)
from .instance import Instance, check_compatibility, make_instance


class BudgetExceeded(RuntimeError):
    pass


class ParameterError(ValueError):
    pass


DEFAULT_BUDGET = 10**6


def enumerate_solutions(inst: Instance, budget: int = DEFAULT_BUDGET) -> list[tuple]:
    if inst.q**inst.n > budget:
        raise BudgetExceeded(f"q^n = {inst.q}^{inst.n} exceeds budget {budget}")
    return [h for h in product(*(sorted(d) for d in inst.domains)) if inst.is_homomorphism(h)]


def brute_signature(inst: Instance, budget: int = DEFAULT_BUDGET, pairkinds=None, solutions=None) -> frozenset:
    """Triples (i, a, b) realized by two solutions that agree below i and read a, b at i."""
    sols = enumerate_solutions(inst, budget) if solutions is None else solutions
    out = set()
    for i in range(inst.n):
        values_after: dict[tuple, set] = {}
        for h in sols:
            values_after.setdefault(h[:i], set()).add(h[i])
        for seen in values_after.values():
            for a in seen:
                for b in seen:
                    if pairkinds is None or is_minority(pairkinds, a, b):
                        out.add((i, a, b))
    return frozenset(out)


def brute_projections(inst: Instance, k: int, budget: int = DEFAULT_BUDGET, solutions=None) -> dict:
    """pi_I of the solution set for every strictly increasing I with 1 <= |I| <= k."""
    sols = enumerate_solutions(inst, budget) if solutions is None else solutions
    return {
        I: {tuple(h[i] for i in I) for h in sols}
        for size in range(1, k + 1)
        for I in combinations(range(inst.n), size)
    }


# -- generators -----------------------------------------------------------

FAMILIES = ("lin_p", "coset", "random_invariant")


def cyclic_group(order: int) -> list[list[int]]:
    return [[(a + b) % order for b in range(order)] for a in range(order)]


def symmetric_group_3() -> list[list[int]]:
    perms = sorted(permutations(range(3)))
    index = {p: i for i, p in enumerate(perms)}
    return [[index[tuple(p[s[x]] for x in range(3))] for s in perms] for p in perms]


@dataclass
class GeneratorSpec:
    family: str
    n: int = 4
    m: int = 6
    seed: int = 0
    satisfiable: bool = True
    p: int = 2  # field size for lin_p, group order for cyclic cosets
    group: str = "cyclic"  # coset family: "cyclic" or "s3"
    q: int = 3  # domain size for random_invariant
    budget: int = DEFAULT_BUDGET
    op: OperationTable | None = field(default=None, repr=False)  # random_invariant override


@dataclass
class Generated:
    instance: Instance
    algebra: OperationTable
    planted: tuple | None
    spec: GeneratorSpec


def _random_pairs(rng: random.Random, n: int, count: int) -> list[tuple[int, int]]:
    out = []
    for _ in range(count):
        i, j = rng.sample(range(n), 2)
        out.append((i, j))
    return out


def _check_unsat(inst: Instance, budget: int) -> bool | None:
    if inst.q**inst.n > budget:
        return None
    return not enumerate_solutions(inst, budget)


def _gen_lin(spec: GeneratorSpec, rng: random.Random) -> Generated:
    p, n = spec.p, spec.n
    if p < 2:
        raise ParameterError("p must be at least 2")
    planted = tuple(rng.randrange(p) for _ in range(n))
    edges = []

    def translation(i, j, c):
        return (i, j, [(a, (a + c) % p) for a in range(p)])

    if spec.satisfiable:
        for i, j in _random_pairs(rng, n, spec.m):
            edges.append(translation(i, j, planted[j] - planted[i]))
    else:
        # a cycle of equations x_{v+1} - x_v = c whose constants do not sum to 0
        length = rng.randint(2, min(n, max(2, spec.m)))
        cycle = rng.sample(range(n), length)
        consts = [rng.randrange(p) for _ in range(length - 1)]
        consts.append((rng.randrange(1, p) - sum(consts)) % p)
        for s in range(length):
            edges.append(translation(cycle[s], cycle[(s + 1) % length], consts[s]))
        for i, j in _random_pairs(rng, n, max(0, spec.m - length)):
            edges.append(translation(i, j, rng.randrange(p)))
        planted = None
    return Generated(make_instance(n, p, None, edges), affine_op(p), planted, spec)


def _subgroup(mul, gens) -> frozenset:
    """Subgroup of G^2 generated by ``gens`` (pairs), using the table ``mul``."""
    current = {(0, 0)} | set(gens)
    while True:
        fresh = {(mul[x[0]][y[0]], mul[x[1]][y[1]]) for x in current for y in current} - current
        if not fresh:
            return frozenset(current)
        current |= fresh


def _gen_coset(spec: GeneratorSpec, rng: random.Random) -> Generated:
    if spec.group == "s3":
        mul = symmetric_group_3()
    elif spec.group == "cyclic":
        mul = cyclic_group(spec.p)
    else:
        raise ParameterError(f"unknown group {spec.group!r}")
    q, n = len(mul), spec.n
    op = group_maltsev_op(mul)

    def coset_through(pair, ngens):
        gens = [(rng.randrange(q), rng.randrange(q)) for _ in range(ngens)]
        H = _subgroup(mul, gens)
        g = pair
        return frozenset((mul[g[0]][h[0]], mul[g[1]][h[1]]) for h in H)

    for attempt in range(200):
        planted = tuple(rng.randrange(q) for _ in range(n))
        edges = []
        for i, j in _random_pairs(rng, n, spec.m):
            if spec.satisfiable:
                start = (planted[i], planted[j])
            else:
                start = (rng.randrange(q), rng.randrange(q))
            edges.append((i, j, coset_through(start, rng.randint(1, 2))))
        inst = make_instance(n, q, None, edges)
        if spec.satisfiable:
            return Generated(inst, op, planted, spec)
        verdict = _check_unsat(inst, spec.budget)
        if verdict:
            return Generated(inst, op, None, spec)
        if verdict is None:
            break
    # fall back to an inconsistent cycle of translations x_j = x_i * c
    return _translation_cycle(spec, rng, mul, op)


def _translation_cycle(spec, rng, mul, op) -> Generated:
    q, n = len(mul), spec.n
    length = rng.randint(2, max(2, min(n, spec.m)))
    cycle = rng.sample(range(n), length)
    consts = [rng.randrange(q) for _ in range(length)]
    prod_ = 0
    for c in consts[:-1]:
        prod_ = mul[prod_][c]
    # choose the last constant so that the product around the cycle is not the identity
    consts[-1] = next(c for c in rng.sample(range(q), q) if mul[prod_][c] != 0)
    edges = [
        (cycle[s], cycle[(s + 1) % length], [(a, mul[a][consts[s]]) for a in range(q)])
        for s in range(length)
    ]
    return Generated(make_instance(n, q, None, edges), op, None, spec)


def random_maltsev_op(q: int, rng: random.Random) -> OperationTable:
    """Random ternary table with the Mal'tsev entries forced."""

    def value(x, y, z):
        if y == z:
            return x
        if x == y:
            return z
        return rng.randrange(q)

    return OperationTable.from_function(q, 3, value)


def _gen_invariant(spec: GeneratorSpec, rng: random.Random) -> Generated:
    q, n = spec.q, spec.n
    op = spec.op if spec.op is not None else random_maltsev_op(q, rng)
    if op.q != q:
        raise ParameterError("operation and q disagree")
    for attempt in range(200):
        planted = tuple(rng.randrange(q) for _ in range(n))
        domains = []
        for i in range(n):
            seedset = {planted[i]} | {rng.randrange(q) for _ in range(rng.randint(0, q))}
            domains.append(closure_unary(op, seedset))
        edges = []
        for i, j in _random_pairs(rng, n, spec.m):
            pairs = {(rng.choice(sorted(domains[i])), rng.choice(sorted(domains[j]))) for _ in range(rng.randint(1, 2))}
            if spec.satisfiable:
                pairs.add((planted[i], planted[j]))
            edges.append((i, j, closure_binary(op, pairs)))
        inst = make_instance(n, q, domains, edges)
        if spec.satisfiable:
            return Generated(inst, op, planted, spec)
        verdict = _check_unsat(inst, spec.budget)
        if verdict:
            return Generated(inst, op, None, spec)
        if verdict is None:
            break
    # fall back to two contradicting singleton constraints (singletons are
    # invariant under any idempotent operation)
    i, j = rng.sample(range(n), 2)
    a, b = rng.randrange(q), rng.randrange(q)
    c = (a + rng.randrange(1, q)) % q if q > 1 else a
    edges = [(i, j, [(a, b)]), (j, i, [(b, c)])]
    for u, v in _random_pairs(rng, n, max(0, spec.m - 2)):
        edges.append((u, v, closure_binary(op, {(rng.randrange(q), rng.randrange(q))})))
    return Generated(make_instance(n, q, None, edges), op, None, spec)


def generate(spec: GeneratorSpec) -> Generated:
    if spec.n < 2:
        raise ParameterError("generators need n >= 2")
    if spec.m < 0 or (not spec.satisfiable and spec.m < 2):
        raise ParameterError("m must be non-negative, and at least 2 for unsatisfiable instances")
    rng = random.Random(spec.seed)
    if spec.family == "lin_p":
        out = _gen_lin(spec, rng)
    elif spec.family == "coset":
        out = _gen_coset(spec, rng)
    elif spec.family == "random_invariant":
        out = _gen_invariant(spec, rng)
    else:
        raise ParameterError(f"unknown family {spec.family!r}")
    assert check_compatibility(out.instance, out.algebra), "generator produced an incompatible instance"
    return out
