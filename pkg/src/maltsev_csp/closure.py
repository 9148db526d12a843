"""The ``nonempty`` engine: closure of a representation's witnesses under an
operation, tracked only through their projections onto a few coordinates.

Generation order is fixed: the seeds are the distinct projections of the
stored maps in canonical key order; each round then applies the operation to
every argument tuple (lexicographic in the current list indices) that uses at
least one element found in the previous round, appending unseen projections
in the order they are met.  A projection's witness is the full map built
alongside it the first time it appears.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numba
import numpy as np

from .algebra import OperationTable


@numba.njit(cache=True)
def _closure_round(table, q, r, proj, count, start, index_of, out_proj, out_parents):
    """One round over ``proj[:count]``; returns the number of new projections written.

    Argument tuples run in lexicographic order; tuples made only of indices
    below ``start`` were handled in earlier rounds and are skipped.
    """
    w = proj.shape[1]
    strides = np.empty(r, np.int64)
    s = 1
    for t in range(r - 1, -1, -1):
        strides[t] = s
        s *= q
    # partial[t, c]: table index contributed by args[0..t-1] on coordinate c
    partial = np.zeros((r + 1, w), np.int64)
    args = np.zeros(r, np.int64)
    # fresh[t]: some index among args[0..t-1] is >= start
    fresh = np.zeros(r + 1, np.bool_)
    fresh[0] = start == 0
    vals = np.empty(w, np.int64)
    found = 0
    t = 0
    args[0] = -1
    while t >= 0:
        # advance position t
        if args[t] < 0:
            first = start if (t == r - 1 and not fresh[t]) else 0
            args[t] = first
        else:
            args[t] += 1
        if args[t] >= count:
            args[t] = -1
            t -= 1
            continue
        x = args[t]
        for c in range(w):
            partial[t + 1, c] = partial[t, c] + proj[x, c] * strides[t]
        fresh[t + 1] = fresh[t] or x >= start
        if t < r - 1:
            t += 1
            args[t] = -1
            continue
        code = 0
        for c in range(w):
            v = table[partial[r, c]]
            vals[c] = v
            code = code * q + v
        if index_of[code] < 0:
            index_of[code] = count + found
            for c in range(w):
                out_proj[found, c] = vals[c]
            for u in range(r):
                out_parents[found, u] = args[u]
            found += 1
    return found


@numba.njit(cache=True)
def _pair_witnesses(table, q, r, op_strides, maps, j, aj, need, out_maps, out_found):
    """For every coordinate i > j and value a with need[i, a], the witness that
    ``nonempty(maps, (j, i), {(aj, a)})`` would return (same generation order)."""
    rows, n = maps.shape
    size = q * q
    proj = np.empty((size, 2), np.int64)
    wmaps = np.empty((size, n), np.int64)
    index_of = np.empty(size, np.int64)
    out_proj = np.empty((size, 2), np.int64)
    out_parents = np.empty((size, r), np.int64)
    for i in range(j + 1, n):
        wanted = 0
        for a in range(q):
            if need[i, a]:
                wanted += 1
        if wanted == 0:
            continue
        index_of[:] = -1
        count = 0
        for row in range(rows):
            code = maps[row, j] * q + maps[row, i]
            if index_of[code] < 0:
                index_of[code] = count
                proj[count, 0] = maps[row, j]
                proj[count, 1] = maps[row, i]
                wmaps[count, :] = maps[row, :]
                count += 1
        start = 0
        while True:
            done = True
            for a in range(q):
                if need[i, a] and index_of[aj * q + a] < 0:
                    done = False
                    break
            if done:
                break
            found = _closure_round(table, q, r, proj, count, start, index_of, out_proj, out_parents)
            if found == 0:
                break
            for f in range(found):
                for c in range(n):
                    idx = 0
                    for u in range(r):
                        idx += wmaps[out_parents[f, u], c] * op_strides[u]
                    wmaps[count + f, c] = table[idx]
                proj[count + f, 0] = out_proj[f, 0]
                proj[count + f, 1] = out_proj[f, 1]
            start = count
            count += found
        for a in range(q):
            if need[i, a]:
                x = index_of[aj * q + a]
                if x >= 0:
                    out_found[i, a] = True
                    out_maps[i, a, :] = wmaps[x, :]


@numba.njit(cache=True)
def _fix_level(table, q, r, op_strides, maps, index, j, aj, out_maps, present):
    """Signature part of fixing ``x_j = aj`` with the Mal'tsev combination, on
    the array form; fills out_maps[i, a, b] / present[i, a, b]."""
    n = maps.shape[1]
    f = index[j, aj, aj]
    if f < 0:
        return
    for i in range(j + 1):
        v = maps[f, i]
        present[i, v, v] = True
        out_maps[i, v, v, :] = maps[f, :]
    need = np.zeros((n, q), np.bool_)
    for i in range(j + 1, n):
        for a in range(q):
            for b in range(a, q):
                if index[i, a, b] >= 0:
                    need[i, a] = True
    pw_maps = np.zeros((n, q, n), np.int64)
    pw_found = np.zeros((n, q), np.bool_)
    _pair_witnesses(table, q, r, op_strides, maps, j, aj, need, pw_maps, pw_found)
    for i in range(j + 1, n):
        for a in range(q):
            if not pw_found[i, a]:
                continue
            for b in range(a, q):
                if index[i, a, b] < 0:
                    continue
                present[i, a, b] = True
                out_maps[i, a, b, :] = pw_maps[i, a, :]
                if a != b:
                    present[i, b, a] = True
                    ta = index[i, a, b]
                    tb = index[i, b, a]
                    for c in range(n):
                        idx = pw_maps[i, a, c] * op_strides[0] + maps[ta, c] * op_strides[1] + maps[tb, c] * op_strides[2]
                        out_maps[i, b, a, c] = table[idx]


def fix_level_arrays(rep, op: OperationTable, j: int, aj: int):
    """Array-form ``fix_level`` for signature-only Mal'tsev representations."""
    n, q = rep.n, rep.q
    out_maps = np.zeros((n, q, q, n), dtype=np.int64)
    present = np.zeros((n, q, q), dtype=np.bool_)
    if not rep.is_empty() and 0 <= aj < q:
        _fix_level(op.flat, q, op.arity, op.strides, rep.matrix(), rep.index(), j, aj, out_maps, present)
    stacked = out_maps[present]  # key maps in lexicographic key order
    index = np.full((n, q, q), -1, dtype=np.int64)
    first, inverse = _dedup_rows(stacked)
    index[present] = inverse
    return stacked[first], index


@numba.njit(cache=True)
def _dedup_rows(rows):
    """Distinct rows by first occurrence: (first indices, row -> distinct number)."""
    k, n = rows.shape
    size = 1
    while size < 2 * k + 2:
        size *= 2
    slots = np.full(size, -1, np.int64)
    first = np.empty(k, np.int64)
    inverse = np.empty(k, np.int64)
    count = 0
    for x in range(k):
        h = np.uint64(1469598103934665603)
        for c in range(n):
            h = (h ^ np.uint64(rows[x, c])) * np.uint64(1099511628211)
        pos = np.int64(h & np.uint64(size - 1))
        while True:
            d = slots[pos]
            if d < 0:
                slots[pos] = count
                first[count] = x
                inverse[x] = count
                count += 1
                break
            y = first[d]
            same = True
            for c in range(n):
                if rows[x, c] != rows[y, c]:
                    same = False
                    break
            if same:
                inverse[x] = d
                break
            pos = (pos + 1) & (size - 1)
    return first[:count], inverse


def pair_witnesses(rep, op: OperationTable, j: int, aj: int, need: np.ndarray):
    """Batched ``nonempty(rep, op, (j, i), [(aj, a)])`` over all (i, a) with need[i, a], i > j.

    Returns (found, maps) arrays of shapes (n, q) and (n, q, n)."""
    n, q = rep.n, op.q
    out_maps = np.zeros((n, q, n), dtype=np.int64)
    out_found = np.zeros((n, q), dtype=np.bool_)
    if not rep.is_empty() and 0 <= aj < q:
        _pair_witnesses(op.flat, q, op.arity, op.strides, rep.matrix(), j, aj, need, out_maps, out_found)
    return out_found, out_maps


class ClosureState:
    """Resumable closure of one representation on one coordinate set."""

    def __init__(self, op: OperationTable, maps: np.ndarray, coords: Sequence[int]):
        self.op = op
        self.coords = tuple(coords)
        w = len(self.coords)
        q = op.q
        self.weights = np.array([q ** (w - 1 - c) for c in range(w)], dtype=np.int64)
        self.index_of = np.full(q**w, -1, dtype=np.int64)
        if maps.shape[0]:
            codes = maps[:, list(self.coords)] @ self.weights
            _, first = np.unique(codes, return_index=True)
            first.sort()
        else:
            first = np.zeros(0, dtype=np.int64)
        self.maps = maps[first].copy()
        self.proj = self.maps[:, list(self.coords)].copy()
        self.index_of[self.proj @ self.weights] = np.arange(len(first))
        self.start = 0
        self.complete = len(first) == 0

    def __len__(self) -> int:
        return self.proj.shape[0]

    def advance(self) -> bool:
        """Run one round; returns False once nothing new appears."""
        if self.complete:
            return False
        count = len(self)
        room = self.index_of.size - count
        out_proj = np.empty((room, self.proj.shape[1]), dtype=np.int64)
        out_parents = np.empty((room, self.op.arity), dtype=np.int64)
        found = _closure_round(
            self.op.flat, self.op.q, self.op.arity, self.proj, count, self.start,
            self.index_of, out_proj, out_parents,
        )
        if found == 0:
            self.complete = True
            return False
        parents = out_parents[:found]
        args = self.maps[parents]  # (found, arity, n)
        idx = np.einsum("fan,a->fn", args, self.op.strides)
        new_maps = self.op.flat[idx]
        self.maps = np.concatenate([self.maps, new_maps])
        self.proj = np.concatenate([self.proj, out_proj[:found]])
        self.start = count
        return True

    def lookup(self, code: int) -> int:
        return int(self.index_of[code])

    def witness(self, index: int) -> tuple:
        return tuple(self.maps[index].tolist())

    def run(self) -> None:
        while self.advance():
            pass

    def projections(self) -> set[tuple]:
        self.run()
        return {tuple(int(v) for v in row) for row in self.proj}


def closure_state(rep, op: OperationTable, coords: tuple) -> ClosureState:
    key = (coords, id(op))
    state = rep.closures.get(key)
    if state is None:
        state = ClosureState(op, rep.matrix(), coords)
        rep.closures[key] = state
    return state


def _target_codes(coords: tuple, ucoords: tuple, q: int, allowed) -> list[int]:
    """Codes (over ``ucoords``) of the allowed tuples, ordered as the tuples are in ``coords`` order."""
    w = len(coords)
    codes = []
    if coords == ucoords:
        for t in allowed:
            if len(t) != w:
                raise ValueError(f"target tuple {tuple(t)} does not match coordinates {coords}")
            code = 0
            for v in t:
                if not 0 <= v < q:
                    break
                code = code * q + v
            else:
                codes.append(code)
        # lexicographic tuple order is numeric code order here
        return sorted(set(codes))
    pos = {c: p for p, c in enumerate(ucoords)}
    weights = [q ** (len(ucoords) - 1 - p) for p in range(len(ucoords))]
    for t in sorted(set(tuple(t) for t in allowed)):
        if len(t) != w:
            raise ValueError(f"target tuple {t} does not match coordinates {coords}")
        norm = [None] * len(ucoords)
        ok = True
        for c, v in zip(coords, t):
            p = pos[c]
            if norm[p] is None:
                norm[p] = v
            elif norm[p] != v:
                ok = False
                break
        if ok and all(0 <= v < q for v in norm):
            codes.append(sum(v * wt for v, wt in zip(norm, weights)))
    return codes


def nonempty(rep, op: OperationTable, coords: Sequence[int], allowed: Iterable[Sequence[int]]):
    """A map in the closure of ``rep``'s witnesses whose projection onto
    ``coords`` lies in ``allowed`` (the smallest such projection wins), or None."""
    coords = tuple(coords)
    ucoords = tuple(sorted(set(coords)))
    codes = _target_codes(coords, ucoords, op.q, allowed)
    if not codes or rep.is_empty():
        return None
    state = closure_state(rep, op, ucoords)
    first = codes[0]
    while state.lookup(first) < 0:
        if not state.advance():
            break
    for code in codes:
        idx = state.lookup(code)
        if idx >= 0:
            return state.witness(idx)
    return None


def nonempty_each(rep, op: OperationTable, coords: Sequence[int], targets: Sequence[Sequence[int]]) -> list:
    """``[nonempty(rep, op, coords, [t]) for t in targets]`` sharing one closure run."""
    coords = tuple(coords)
    ucoords = tuple(sorted(set(coords)))
    q = op.q
    firstpos = [coords.index(c) for c in ucoords]
    codes = []
    for t in targets:
        if len(t) != len(coords):
            raise ValueError(f"target tuple {tuple(t)} does not match coordinates {coords}")
        ok = all(t[p] == t[firstpos[ucoords.index(c)]] for p, c in enumerate(coords)) and all(0 <= v < q for v in t)
        code = -1
        if ok:
            code = 0
            for p in firstpos:
                code = code * q + t[p]
        codes.append(code)
    if rep.is_empty():
        return [None] * len(codes)
    state = closure_state(rep, op, ucoords)
    wanted = [c for c in codes if c >= 0]
    while any(state.lookup(c) < 0 for c in wanted):
        if not state.advance():
            break
    out = []
    for code in codes:
        idx = state.lookup(code) if code >= 0 else -1
        out.append(state.witness(idx) if idx >= 0 else None)
    return out
