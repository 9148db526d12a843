"""Solving with a (k+1)-ary generalized majority-minority operation.

Representations carry, besides witness pairs for the minority-pair part of
the signature, one map for every tuple in each projection onto at most ``k``
coordinates.  The step structure is shared with the Mal'tsev solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import OperationTable, PairKind, apply_rows, validate_gmm
from .instance import Edge, Instance, check_compatibility
from .maltsev import (
    IncompatibleAlgebra,
    InvalidAlgebra,
    SolveOutcome,
    empty_trace,
    finish,
    fixvalues_with,
    next_with,
    run_steps,
)
from .representation import GMM, CompactRepresentation, init_representation


@dataclass(frozen=True)
class GmmContext:
    op: OperationTable
    pairkinds: dict
    k: int

    @classmethod
    def from_op(cls, op: OperationTable) -> "GmmContext":
        try:
            kinds = validate_gmm(op)
        except ValueError as exc:
            raise InvalidAlgebra(str(exc)) from exc
        return cls(op, kinds, op.arity - 1)

    def majority_pairs(self) -> list:
        return [p for p, kind in sorted(self.pairkinds.items()) if kind is PairKind.MAJORITY]


def gmm_minority_witness(ctx: GmmContext, t, ta, tb) -> np.ndarray:
    """phi(t, ..., t, phi(t, ta, ..., ta, tb)): agrees with ``t`` wherever ``ta`` and ``tb`` agree.

    Works pointwise on equally shaped arrays (single maps or stacks of rows)."""
    r = ctx.op.arity
    inner = apply_rows(ctx.op, [t] + [ta] * (r - 2) + [tb])
    return apply_rows(ctx.op, [t] * (r - 1) + [inner])


def gmm_combine(ctx: GmmContext):
    return lambda t, ta, tb: gmm_minority_witness(ctx, t, ta, tb)


def init_gmm(inst: Instance, ctx: GmmContext) -> CompactRepresentation:
    return init_representation(inst, GMM, ctx.k, ctx.pairkinds)


def fixvalues_gmm(rep: CompactRepresentation, prefix: Sequence[int], length: int, ctx: GmmContext) -> CompactRepresentation:
    return fixvalues_with(rep, ctx.op, prefix, length, gmm_combine(ctx))


def next_gmm(rep: CompactRepresentation, edge: Edge, ctx: GmmContext) -> CompactRepresentation:
    return next_with(rep, ctx.op, edge, gmm_combine(ctx))


def solve_gmm(inst: Instance, ctx: GmmContext | OperationTable) -> SolveOutcome:
    if isinstance(ctx, OperationTable):
        ctx = GmmContext.from_op(ctx)
    compat = check_compatibility(inst, ctx.op)
    if not compat:
        raise IncompatibleAlgebra(compat.detail)
    if any(not d for d in inst.domains):
        reps = empty_trace(inst, CompactRepresentation(inst.n, inst.q, GMM, ctx.k))
        return SolveOutcome(inst, ctx.op, GMM, reps, None)
    combine = gmm_combine(ctx)
    reps = run_steps(inst, init_gmm(inst, ctx), lambda r, e: next_with(r, ctx.op, e, combine))
    return finish(inst, ctx.op, GMM, reps)
