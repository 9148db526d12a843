"""Finite operation tables and the identity checks the solvers rely on."""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass
from itertools import product
from typing import Any, Iterable, Sequence

import numpy as np


class AlgebraError(ValueError):
    pass


class ArityMismatch(AlgebraError):
    pass


class LengthMismatch(AlgebraError):
    pass


class NotGMM(AlgebraError):
    def __init__(self, a: int, b: int):
        super().__init__(f"pair {{{a},{b}}} is neither a majority nor a minority pair")
        self.pair = (a, b)


class PairKind(enum.Enum):
    MINORITY = "minority"
    MAJORITY = "majority"


@dataclass(frozen=True)
class Verdict:
    """Outcome of a check; truthy iff accepted."""

    ok: bool
    detail: str = ""
    witness: Any = None

    def __bool__(self) -> bool:
        return self.ok


class OperationTable:
    """A total ``arity``-ary operation on ``{0..q-1}``, stored densely in row-major order."""

    def __init__(self, q: int, arity: int, table: Sequence[int]):
        if q < 1:
            raise AlgebraError(f"domain size must be positive, got {q}")
        if arity < 1:
            raise AlgebraError(f"arity must be positive, got {arity}")
        flat = np.asarray(list(table), dtype=np.int64)
        if flat.ndim != 1 or flat.size != q**arity:
            raise AlgebraError(f"table needs {q**arity} entries, got {flat.size}")
        if flat.size and (flat.min() < 0 or flat.max() >= q):
            raise AlgebraError("table values must lie in [0, q)")
        flat.setflags(write=False)
        self.q = q
        self.arity = arity
        self.flat = flat
        self.cube = flat.reshape((q,) * arity)
        # weights turning an argument tuple into a flat index
        self.strides = np.array([q ** (arity - 1 - t) for t in range(arity)], dtype=np.int64)

    @classmethod
    def from_function(cls, q: int, arity: int, fn) -> "OperationTable":
        return cls(q, arity, [fn(*args) for args in product(range(q), repeat=arity)])

    def __call__(self, *args: int) -> int:
        return int(self.cube[args])

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, OperationTable)
            and self.q == other.q
            and self.arity == other.arity
            and np.array_equal(self.flat, other.flat)
        )

    def __hash__(self) -> int:
        return hash((self.q, self.arity, self.flat.tobytes()))

    def __repr__(self) -> str:
        return f"OperationTable(q={self.q}, arity={self.arity})"

    def to_json(self) -> dict:
        return {"q": self.q, "arity": self.arity, "table": [int(v) for v in self.flat]}

    @classmethod
    def from_json(cls, data: dict) -> "OperationTable":
        try:
            return cls(int(data["q"]), int(data["arity"]), data["table"])
        except (KeyError, TypeError) as exc:
            raise AlgebraError(f"malformed algebra file: {exc!r}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()


def load_algebra(text: str) -> OperationTable:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AlgebraError(f"algebra file is not JSON (line {exc.lineno}, col {exc.colno})") from exc
    return OperationTable.from_json(data)


# -- canonical operations -------------------------------------------------


def affine_op(p: int) -> OperationTable:
    """x - y + z mod p."""
    return OperationTable.from_function(p, 3, lambda x, y, z: (x - y + z) % p)


def majority_op(q: int = 2) -> OperationTable:
    """maj(x, y, z): the repeated value when there is one, else x."""

    def maj(x, y, z):
        if y == z:
            return y
        return x

    return OperationTable.from_function(q, 3, maj)


def group_maltsev_op(mul: Sequence[Sequence[int]]) -> OperationTable:
    """x * y^-1 * z for the group given by its multiplication table (identity 0)."""
    q = len(mul)
    inv = [next(b for b in range(q) if mul[a][b] == 0) for a in range(q)]
    return OperationTable.from_function(q, 3, lambda x, y, z: mul[mul[x][inv[y]]][z])


# -- identity checks ------------------------------------------------------


def validate_maltsev(op: OperationTable) -> Verdict:
    if op.arity != 3:
        raise ArityMismatch(f"a Mal'tsev table must be ternary, got arity {op.arity}")
    for a, b in product(range(op.q), repeat=2):
        if op(a, b, b) != a:
            return Verdict(False, f"op{(a, b, b)} = {op(a, b, b)} != {a}", (a, b, b))
        if op(b, b, a) != a:
            return Verdict(False, f"op{(b, b, a)} = {op(b, b, a)} != {a}", (b, b, a))
    return Verdict(True)


def _one_off(r: int, pos: int, odd: int, rest: int) -> tuple:
    args = [rest] * r
    args[pos] = odd
    return tuple(args)


def classify_pair(op: OperationTable, a: int, b: int) -> PairKind | None:
    r = op.arity
    # x = y is allowed in both clauses, so each needs op idempotent at a and b
    if op(*([a] * r)) != a or op(*([b] * r)) != b:
        return None
    if a == b:
        return PairKind.MINORITY
    if all(
        op(*_one_off(r, pos, x, y)) == y
        for x, y in ((a, b), (b, a))
        for pos in range(r)
    ):
        return PairKind.MAJORITY
    if all(
        op(*_one_off(r, 0, x, y)) == x and op(*_one_off(r, r - 1, x, y)) == x
        for x, y in ((a, b), (b, a))
    ):
        return PairKind.MINORITY
    return None


def validate_gmm(op: OperationTable) -> dict[tuple[int, int], PairKind]:
    """Classify every pair ``a <= b``; raise NotGMM on the first pair fitting neither clause."""
    if op.arity < 3:
        raise ArityMismatch(f"a GMM table needs arity >= 3, got {op.arity}")
    kinds = {}
    for a in range(op.q):
        for b in range(a, op.q):
            kind = classify_pair(op, a, b)
            if kind is None:
                raise NotGMM(a, b)
            kinds[(a, b)] = kind
    return kinds


def is_minority(kinds: dict[tuple[int, int], PairKind], a: int, b: int) -> bool:
    return kinds[(min(a, b), max(a, b))] is PairKind.MINORITY


def is_idempotent(op: OperationTable) -> bool:
    return all(op(*([a] * op.arity)) == a for a in range(op.q))


# -- polymorphism tests ---------------------------------------------------


def _apply_columns(op: OperationTable, cols: np.ndarray) -> np.ndarray:
    """Apply op to each row of an (N, arity) integer array."""
    return op.flat[cols @ op.strides]


def binary_violation(op: OperationTable, rel: Iterable[tuple[int, int]]):
    """First arity-tuple of pairs (in product order) whose image leaves ``rel``, or None."""
    pairs = sorted(set(rel))
    if not pairs:
        return None
    arr = np.array(pairs, dtype=np.int64)
    r = op.arity
    idx = np.indices((len(pairs),) * r).reshape(r, -1).T
    left = _apply_columns(op, arr[idx, 0])
    right = _apply_columns(op, arr[idx, 1])
    member = np.zeros((op.q, op.q), dtype=bool)
    member[arr[:, 0], arr[:, 1]] = True
    bad = np.flatnonzero(~member[left, right])
    if bad.size == 0:
        return None
    first = bad[0]
    args = tuple(pairs[t] for t in idx[first])
    return args, (int(left[first]), int(right[first]))


def preserves_binary(op: OperationTable, rel: Iterable[tuple[int, int]]) -> bool:
    return binary_violation(op, rel) is None


def preserves_unary(op: OperationTable, dom: Iterable[int]) -> bool:
    vals = sorted(set(dom))
    if not vals:
        return True
    arr = np.array(vals, dtype=np.int64)
    idx = np.indices((len(vals),) * op.arity).reshape(op.arity, -1).T
    image = _apply_columns(op, arr[idx])
    return bool(np.isin(image, arr).all())


def apply_pointwise(op: OperationTable, maps: Sequence[Sequence[int]]) -> tuple[int, ...]:
    if len(maps) != op.arity:
        raise ArityMismatch(f"expected {op.arity} maps, got {len(maps)}")
    n = len(maps[0])
    if any(len(h) != n for h in maps):
        raise LengthMismatch("maps disagree on the number of variables")
    if n == 0:
        return ()
    cols = np.asarray(maps, dtype=np.int64).T
    return tuple(int(v) for v in _apply_columns(op, cols))


def apply_rows(op: OperationTable, arrays: Sequence[np.ndarray]) -> np.ndarray:
    """Pointwise application to equally shaped integer arrays (one per argument)."""
    if len(arrays) != op.arity:
        raise ArityMismatch(f"expected {op.arity} arrays, got {len(arrays)}")
    idx = np.zeros(np.shape(arrays[0]), dtype=np.int64)
    for arr, s in zip(arrays, op.strides):
        idx += np.asarray(arr, dtype=np.int64) * s
    return op.flat[idx]


def closure_binary(op: OperationTable, rel: Iterable[tuple[int, int]]) -> frozenset:
    """Smallest op-invariant binary relation containing ``rel``."""
    current = set(rel)
    while True:
        items = sorted(current)
        fresh = set()
        for args in product(items, repeat=op.arity):
            pair = (op(*(p[0] for p in args)), op(*(p[1] for p in args)))
            if pair not in current:
                fresh.add(pair)
        if not fresh:
            return frozenset(current)
        current |= fresh


def closure_unary(op: OperationTable, dom: Iterable[int]) -> frozenset:
    current = set(dom)
    while True:
        fresh = {op(*args) for args in product(sorted(current), repeat=op.arity)} - current
        if not fresh:
            return frozenset(current)
        current |= fresh
