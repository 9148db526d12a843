"""Unsatisfiability certificates.

A certificate records the edge order and the whole representation sequence
R_0..R_m of a run that ended empty.  The checker recomputes every step
from its predecessor and additionally checks each stored map against the
prefix instance it claims to solve, so a certificate that passes can only
describe an instance without solutions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .algebra import OperationTable, validate_maltsev
from .gmm import GmmContext, gmm_combine
from .instance import Instance, edge_to_json
from .maltsev import InvalidAlgebra, SolveOutcome, maltsev_combine, next_with
from .representation import (
    GMM,
    MALTSEV,
    CompactRepresentation,
    MalformedRepresentation,
    init_representation,
)

VERDICT = "unsat"


class CertificateError(ValueError):
    pass


class NotUnsat(CertificateError):
    pass


class RejectAtStep(CertificateError):
    """``step`` is the index l of the failing representation, or None for header problems."""

    def __init__(self, step: int | None, reason: str):
        where = "header" if step is None else f"step {step}"
        super().__init__(f"{where}: {reason}")
        self.step = step
        self.reason = reason


@dataclass(frozen=True)
class Trace:
    instance_digest: str
    algebra_digest: str
    mode: str
    edges: list
    reps: list
    verdict: str = VERDICT

    def to_json(self) -> dict:
        return {
            "instance_digest": self.instance_digest,
            "algebra_digest": self.algebra_digest,
            "mode": self.mode,
            "edges": self.edges,
            "reps": self.reps,
            "verdict": self.verdict,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))


def trace_of(outcome: SolveOutcome) -> Trace:
    if outcome.sat:
        raise NotUnsat("satisfiable outcome has no unsatisfiability certificate")
    inst = outcome.instance
    return Trace(
        inst.digest(),
        outcome.algebra.digest(),
        outcome.mode,
        [edge_to_json(e) for e in inst.edges],
        [rep.to_json() for rep in outcome.reps],
    )


def emit_certificate(outcome: SolveOutcome) -> str:
    """Canonical certificate text (byte-identical across runs)."""
    return trace_of(outcome).dumps()


def parse_certificate(text: str) -> Trace:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RejectAtStep(None, f"not JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise RejectAtStep(None, "certificate must be a JSON object")
    fields = ("instance_digest", "algebra_digest", "mode", "edges", "reps", "verdict")
    missing = [f for f in fields if f not in data]
    if missing:
        raise RejectAtStep(None, f"missing field {missing[0]!r}")
    extra = sorted(set(data) - set(fields))
    if extra:
        raise RejectAtStep(None, f"unexpected field {extra[0]!r}")
    if not isinstance(data["edges"], list) or not isinstance(data["reps"], list):
        raise RejectAtStep(None, "edges and reps must be lists")
    return Trace(**{f: data[f] for f in fields})


def _decode(items, step: int, inst: Instance, mode: str, k) -> CompactRepresentation:
    if not isinstance(items, list):
        raise RejectAtStep(step, "representation must be a list")
    try:
        rep = CompactRepresentation.from_json(items, inst.n, inst.q, mode, k)
    except MalformedRepresentation as exc:
        raise RejectAtStep(step, str(exc)) from exc
    # only the canonical listing is accepted, so every certificate has one spelling
    if rep.to_json() != items:
        raise RejectAtStep(step, "representation entries not in canonical form")
    return rep


def _check_members(rep: CompactRepresentation, inst: Instance, step: int) -> None:
    prefix = inst.prefix(step)
    for key, t in list(rep.sig.items()) + list(rep.proj.items()):
        if not prefix.is_homomorphism(t):
            raise RejectAtStep(step, f"map under key {key} is not a solution of the first {step} edges")


def check_certificate(inst: Instance, op: OperationTable, trace: Trace | str) -> bool:
    """Accept (return True) or raise RejectAtStep at the first failing condition."""
    if isinstance(trace, str):
        trace = parse_certificate(trace)
    if trace.verdict != VERDICT:
        raise RejectAtStep(None, f"verdict {trace.verdict!r} is not {VERDICT!r}")
    if trace.instance_digest != inst.digest():
        raise RejectAtStep(None, "instance digest mismatch")
    if trace.algebra_digest != op.digest():
        raise RejectAtStep(None, "algebra digest mismatch")
    if trace.edges != [edge_to_json(e) for e in inst.edges]:
        raise RejectAtStep(None, "edge list does not match the instance")
    if len(trace.reps) != inst.m + 1:
        raise RejectAtStep(None, f"expected {inst.m + 1} representations, found {len(trace.reps)}")
    if trace.mode == MALTSEV:
        try:
            ok = validate_maltsev(op)
        except ValueError as exc:
            raise RejectAtStep(None, str(exc)) from exc
        if not ok:
            raise RejectAtStep(None, f"algebra is not Mal'tsev: {ok.detail}")
        k, kinds, combine = None, None, maltsev_combine(op)
    elif trace.mode == GMM:
        try:
            ctx = GmmContext.from_op(op)
        except InvalidAlgebra as exc:
            raise RejectAtStep(None, str(exc)) from exc
        k, kinds, combine = ctx.k, ctx.pairkinds, gmm_combine(ctx)
    else:
        raise RejectAtStep(None, f"unknown mode {trace.mode!r}")

    prev = _decode(trace.reps[0], 0, inst, trace.mode, k)
    if any(not d for d in inst.domains):
        expected = CompactRepresentation(inst.n, inst.q, trace.mode, k)
    else:
        expected = init_representation(inst, trace.mode, k, kinds)
    if prev != expected:
        raise RejectAtStep(0, "initial representation differs from the canonical one")
    _check_members(prev, inst, 0)
    for step, edge in enumerate(inst.edges, start=1):
        cur = _decode(trace.reps[step], step, inst, trace.mode, k)
        _check_members(cur, inst, step)
        replay = next_with(prev, op, edge, combine)
        prev.closures.clear()
        if replay != cur:
            raise RejectAtStep(step, "representation differs from the replayed step")
        prev = cur
    if not prev.is_empty():
        raise RejectAtStep(inst.m, "final representation is not empty")
    return True
