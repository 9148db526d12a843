"""Constraint-by-constraint solving with compact representations.

``solve`` starts from the representation of the edgeless instance and adds
the edges one at a time in sorted order.  Each step (``next_step``) rebuilds
the witness pairs for every signature triple from two ``nonempty`` queries,
the second one run on the representation returned by ``fixvalues``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import OperationTable, apply_rows, validate_maltsev
from .closure import fix_level_arrays, nonempty, nonempty_each, pair_witnesses
from .instance import Edge, Instance, check_compatibility
from .representation import MALTSEV, CompactRepresentation, init_representation


class SolverError(ValueError):
    pass


class InvalidAlgebra(SolverError):
    pass


class IncompatibleAlgebra(SolverError):
    pass


@dataclass
class SolveOutcome:
    instance: Instance
    algebra: OperationTable
    mode: str
    reps: list = field(repr=False)
    witness: tuple | None = None

    @property
    def sat(self) -> bool:
        return self.witness is not None


# combine(T, T_a, T_b) works row-wise on (K, n) arrays
Combine = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def maltsev_combine(op: OperationTable) -> Combine:
    return lambda t, ta, tb: apply_rows(op, (t, ta, tb))


def fix_level(U: CompactRepresentation, op: OperationTable, j: int, aj: int, combine: Combine) -> CompactRepresentation:
    """Restrict the represented relation by ``x_j = aj`` (all earlier coordinates are already fixed)."""
    if U.mode == MALTSEV:
        # same result as fix_level_generic with maltsev_combine, computed on arrays
        maps, index = fix_level_arrays(U, op, j, aj)
        return CompactRepresentation.from_arrays(U.n, U.q, maps, index)
    return fix_level_generic(U, op, j, aj, combine)


def fix_level_generic(U: CompactRepresentation, op: OperationTable, j: int, aj: int, combine: Combine) -> CompactRepresentation:
    fixed = U.sig.get((j, aj, aj))
    out = U.empty_like()
    if fixed is None:
        return out
    for i in range(j + 1):
        out.sig[(i, fixed[i], fixed[i])] = fixed
    keys = [(i, a, b) for i, a, b in U.sig_keys() if i > j and a <= b]
    need = np.zeros((U.n, U.q), dtype=np.bool_)
    for i, a, _ in keys:
        need[i, a] = True
    found, maps = pair_witnesses(U, op, j, aj, need)
    keys = [key for key in keys if found[key[0], key[1]]]
    pairs = [key for key in keys if key[1] != key[2]]
    if pairs:
        sel = np.array([(i, a) for i, a, _ in pairs])
        t = maps[sel[:, 0], sel[:, 1]]
        ta = U.rows(U.sig[key] for key in pairs)
        tb = U.rows(U.sig[(i, b, a)] for i, a, b in pairs)
        mixed = dict(zip(pairs, map(tuple, combine(t, ta, tb).tolist())))
    else:
        mixed = {}
    found_maps = {}
    for i, a, b in keys:
        t = found_maps.get((i, a))
        if t is None:
            t = found_maps[(i, a)] = tuple(maps[i, a].tolist())
        out.sig[(i, a, b)] = t
        if a != b:
            out.sig[(i, b, a)] = mixed[(i, a, b)]
    by_coords: dict = {}
    for I, vals in U.proj_keys():
        by_coords.setdefault(I, []).append(vals)
    for I, vals_list in by_coords.items():
        found = nonempty_each(U, op, (j,) + I, [(aj,) + vals for vals in vals_list])
        for vals, t in zip(vals_list, found):
            if t is not None:
                out.proj[(I, vals)] = t
    return out


def fixvalues_with(
    rep: CompactRepresentation,
    op: OperationTable,
    prefix: Sequence[int],
    length: int,
    combine: Combine,
    memo: dict | None = None,
) -> CompactRepresentation:
    if not 0 <= length <= rep.n:
        raise ValueError(f"prefix length {length} outside 0..{rep.n}")
    U = rep
    for j in range(length):
        key = tuple(prefix[: j + 1])
        if memo is not None and key in memo:
            U = memo[key]
            continue
        U = fix_level(U, op, j, prefix[j], combine)
        if memo is not None:
            memo[key] = U
    return U


def fixvalues(rep: CompactRepresentation, op: OperationTable, prefix: Sequence[int], length: int) -> CompactRepresentation:
    """Representation of the solutions that agree with ``prefix`` on coordinates ``0..length-1``."""
    return fixvalues_with(rep, op, prefix, length, maltsev_combine(op))


def next_with(rep: CompactRepresentation, op: OperationTable, edge: Edge, combine: Combine) -> CompactRepresentation:
    i, j, rel = edge
    out = rep.empty_like()
    if rep.is_empty() or not rel:
        return out
    rel = sorted(rel)
    memo: dict = {}
    for k in range(rep.n):
        for a in range(rep.q):
            # the new signature is a subset of the old one
            if (k, a, a) not in rep.sig:
                continue
            ha = nonempty(rep, op, (i, j, k), [(x, y, a) for x, y in rel])
            if ha is None:
                continue
            out.sig[(k, a, a)] = ha
            for b in range(a + 1, rep.q):
                if (k, a, b) not in rep.sig:
                    continue
                U = fixvalues_with(rep, op, ha, k, combine, memo)
                hb = nonempty(U, op, (i, j, k), [(x, y, b) for x, y in rel])
                if hb is not None:
                    out.sig[(k, a, b)] = ha
                    out.sig[(k, b, a)] = hb
    for I, vals in rep.proj_keys():
        t = nonempty(rep, op, (i, j) + I, [(x, y) + vals for x, y in rel])
        if t is not None:
            out.proj[(I, vals)] = t
    return out


def next_step(rep: CompactRepresentation, op: OperationTable, edge: Edge) -> CompactRepresentation:
    """Representation of the previous prefix's solutions that also satisfy ``edge``."""
    return next_with(rep, op, edge, maltsev_combine(op))


def run_steps(inst: Instance, first: CompactRepresentation, step) -> list:
    reps = [first]
    for edge in inst.edges:
        prev = reps[-1]
        reps.append(step(prev, edge))
        prev.closures.clear()
    reps[-1].closures.clear()
    return reps


def finish(inst: Instance, op: OperationTable, mode: str, reps: list) -> SolveOutcome:
    last = reps[-1]
    witness = None
    if not last.is_empty():
        witness = last.witnesses()[0]
        if not inst.is_homomorphism(witness):
            raise AssertionError("final representation holds a non-solution")
    return SolveOutcome(inst, op, mode, reps, witness)


def empty_trace(inst: Instance, template: CompactRepresentation) -> list:
    """Trace for an instance with an empty domain: every representation is empty."""
    return [template.empty_like() for _ in range(inst.m + 1)]


def solve(inst: Instance, op: OperationTable) -> SolveOutcome:
    try:
        verdict = validate_maltsev(op)
    except ValueError as exc:
        raise InvalidAlgebra(str(exc)) from exc
    if not verdict:
        raise InvalidAlgebra(f"not a Mal'tsev operation: {verdict.detail}")
    compat = check_compatibility(inst, op)
    if not compat:
        raise IncompatibleAlgebra(compat.detail)
    if any(not d for d in inst.domains):
        reps = empty_trace(inst, CompactRepresentation(inst.n, inst.q))
        return SolveOutcome(inst, op, MALTSEV, reps, None)
    combine = maltsev_combine(op)
    reps = run_steps(inst, init_representation(inst), lambda r, e: next_with(r, op, e, combine))
    return finish(inst, op, MALTSEV, reps)
