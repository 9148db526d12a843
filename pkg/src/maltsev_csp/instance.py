"""Binary CSP instances as digraphs with per-variable domains."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .algebra import OperationTable, Verdict, binary_violation, preserves_unary


class InstanceError(ValueError):
    pass


class ParseError(InstanceError):
    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class DomainViolation(InstanceError):
    def __init__(self, edge: tuple[int, int], pair: tuple[int, int]):
        i, j = edge
        super().__init__(f"edge ({i},{j}) allows {pair} outside D_{i} x D_{j}")
        self.edge = edge
        self.pair = pair


class Edge(NamedTuple):
    source: int
    target: int
    rel: frozenset


AssignmentMap = tuple  # tuple[int, ...] indexed by variable


@dataclass(frozen=True)
class Instance:
    n: int
    q: int
    domains: tuple[frozenset, ...]
    edges: tuple[Edge, ...]

    @property
    def m(self) -> int:
        return len(self.edges)

    def prefix(self, l: int) -> "Instance":
        """The instance with only the first ``l`` edges (in sorted order)."""
        if not 0 <= l <= self.m:
            raise IndexError(f"step {l} outside 0..{self.m}")
        return Instance(self.n, self.q, self.domains, self.edges[:l])

    def is_homomorphism(self, h: Sequence[int]) -> bool:
        if len(h) != self.n:
            return False
        if any(h[i] not in self.domains[i] for i in range(self.n)):
            return False
        return all((h[e.source], h[e.target]) in e.rel for e in self.edges)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "q": self.q,
            "domains": [sorted(d) for d in self.domains],
            "edges": [edge_to_json(e) for e in self.edges],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()


def edge_to_json(e: Edge) -> dict:
    return {"from": e.source, "to": e.target, "rel": [list(p) for p in sorted(e.rel)]}


def make_instance(
    n: int,
    q: int,
    domains: Iterable[Iterable[int]] | None,
    edges: Iterable[tuple[int, int, Iterable[tuple[int, int]]]],
) -> Instance:
    """Validate and normalize: intersect duplicate edges, sort by (from, to)."""
    if n < 1 or q < 1:
        raise InstanceError("n and q must be positive")
    doms = [frozenset(range(q))] * n if domains is None else [frozenset(d) for d in domains]
    if len(doms) != n:
        raise InstanceError(f"expected {n} domains, got {len(doms)}")
    for i, d in enumerate(doms):
        if any(not 0 <= a < q for a in d):
            raise InstanceError(f"domain {i} has values outside [0, {q})")
    merged: dict[tuple[int, int], frozenset] = {}
    for i, j, rel in edges:
        if not (0 <= i < n and 0 <= j < n):
            raise InstanceError(f"edge ({i},{j}) refers to a missing variable")
        rel = frozenset((int(a), int(b)) for a, b in rel)
        for a, b in sorted(rel):
            if not (0 <= a < q and 0 <= b < q):
                raise InstanceError(f"edge ({i},{j}) has pair {(a, b)} outside [0, {q})")
            if a not in doms[i] or b not in doms[j]:
                raise DomainViolation((i, j), (a, b))
        merged[(i, j)] = merged[(i, j)] & rel if (i, j) in merged else rel
    ordered = tuple(Edge(i, j, merged[(i, j)]) for i, j in sorted(merged))
    return Instance(n, q, tuple(doms), ordered)


def _expect_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"expected an integer, got {value!r}", where)
    return value


def instance_from_json(data) -> Instance:
    if not isinstance(data, dict):
        raise ParseError("top level must be an object", "$")
    for key in ("n", "q", "domains", "edges"):
        if key not in data:
            raise ParseError(f"missing key {key!r}", "$")
    n = _expect_int(data["n"], "$.n")
    q = _expect_int(data["q"], "$.q")
    if not isinstance(data["domains"], list):
        raise ParseError("expected a list", "$.domains")
    domains = []
    for i, d in enumerate(data["domains"]):
        if not isinstance(d, list):
            raise ParseError("expected a list", f"$.domains[{i}]")
        domains.append({_expect_int(a, f"$.domains[{i}]") for a in d})
    if not isinstance(data["edges"], list):
        raise ParseError("expected a list", "$.edges")
    edges = []
    for e, item in enumerate(data["edges"]):
        where = f"$.edges[{e}]"
        if not isinstance(item, dict) or not {"from", "to", "rel"} <= item.keys():
            raise ParseError("edge needs 'from', 'to' and 'rel'", where)
        rel = []
        if not isinstance(item["rel"], list):
            raise ParseError("expected a list of pairs", where + ".rel")
        for r, pair in enumerate(item["rel"]):
            if not isinstance(pair, list) or len(pair) != 2:
                raise ParseError("expected a pair", f"{where}.rel[{r}]")
            rel.append((_expect_int(pair[0], f"{where}.rel[{r}]"), _expect_int(pair[1], f"{where}.rel[{r}]")))
        edges.append((_expect_int(item["from"], where + ".from"), _expect_int(item["to"], where + ".to"), rel))
    try:
        inst = make_instance(n, q, domains, edges)
    except DomainViolation:
        raise
    except InstanceError as exc:
        raise ParseError(str(exc), "$") from exc
    # optional unary constraints: narrow the domains and drop edge pairs that leave them
    narrowed = list(inst.domains)
    unary = data.get("unary", [])
    if not isinstance(unary, list):
        raise ParseError("expected a list", "$.unary")
    for u, item in enumerate(unary):
        where = f"$.unary[{u}]"
        try:
            var = _expect_int(item["var"], where + ".var")
            allowed = {_expect_int(a, where + ".values") for a in item["values"]}
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed unary constraint ({exc!r})", where) from exc
        if not 0 <= var < n:
            raise ParseError(f"variable {var} out of range", where)
        narrowed[var] = narrowed[var] & frozenset(allowed)
    if not unary:
        return inst
    pruned = [
        (e.source, e.target, {(a, b) for a, b in e.rel if a in narrowed[e.source] and b in narrowed[e.target]})
        for e in inst.edges
    ]
    return make_instance(n, q, narrowed, pruned)


def parse_instance(text: str) -> Instance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno}, col {exc.colno}") from exc
    return instance_from_json(data)


def check_compatibility(inst: Instance, op: OperationTable) -> Verdict:
    if op.q != inst.q:
        return Verdict(False, f"algebra has q={op.q}, instance has q={inst.q}")
    for i, d in enumerate(inst.domains):
        if not preserves_unary(op, d):
            return Verdict(False, f"domain {i} is not preserved", ("domain", i))
    for e in inst.edges:
        bad = binary_violation(op, e.rel)
        if bad is not None:
            args, image = bad
            return Verdict(
                False,
                f"edge ({e.source},{e.target}) is not preserved: {args} -> {image}",
                ("edge", (e.source, e.target)),
            )
    return Verdict(True)
