"""Compact representations: keyed stores of witness maps.

Signature keys are triples ``(i, a, b)``; the stored map ``T`` has ``T[i] == a``
and agrees with the map under ``(i, b, a)`` on every coordinate below ``i``.
In GMM mode the store also holds projection keys ``(I, vals)`` with ``I``
strictly increasing and ``len(I) <= k``; the map there has ``vals`` on ``I``.
"""

from __future__ import annotations

from itertools import chain, combinations, product
from math import comb
from typing import Iterable

import numpy as np

from .algebra import Verdict, is_minority
from .instance import Instance, InstanceError

MALTSEV = "maltsev"
GMM = "gmm"


class EmptyDomain(InstanceError):
    def __init__(self, i: int):
        super().__init__(f"domain of variable {i} is empty")
        self.var = i


class MalformedRepresentation(ValueError):
    pass


def proj_sort_key(key):
    I, vals = key
    return (len(I), I, vals)


class CompactRepresentation:
    """Immutable witness store. Build a new one rather than mutating ``sig``/``proj``."""

    __slots__ = ("n", "q", "mode", "k", "_sig", "proj", "_witnesses", "_rows", "_matrix", "_index", "closures")

    def __init__(self, n: int, q: int, mode: str = MALTSEV, k: int | None = None, sig=None, proj=None):
        if mode not in (MALTSEV, GMM):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == GMM and (k is None or k < 2):
            raise ValueError("GMM mode needs a projection width k >= 2")
        self.n = n
        self.q = q
        self.mode = mode
        self.k = k if mode == GMM else None
        self._sig: dict[tuple[int, int, int], tuple] | None = dict(sig or {})
        self.proj: dict[tuple[tuple, tuple], tuple] = dict(proj or {})
        self._witnesses = None
        self._rows = None
        self._matrix = None
        # index[i, a, b]: matrix row stored under (i, a, b), or -1
        self._index = None
        # per-coords closure state, filled lazily by the nonempty engine
        self.closures: dict = {}

    @classmethod
    def from_arrays(cls, n: int, q: int, matrix: np.ndarray, index: np.ndarray, mode: str = MALTSEV, k=None):
        """Signature-only representation given by distinct maps (rows, in canonical
        order) and an (n, q, q) array of row numbers."""
        rep = cls(n, q, mode, k)
        rep._sig = None
        rep._matrix = matrix
        rep._index = index
        return rep

    @property
    def sig(self) -> dict:
        if self._sig is None:
            rows = [tuple(h) for h in self._matrix.tolist()]
            keys = np.argwhere(self._index >= 0)
            self._sig = {
                (int(i), int(a), int(b)): rows[r]
                for (i, a, b), r in zip(keys.tolist(), self._index[self._index >= 0].tolist())
            }
        return self._sig

    def index(self) -> np.ndarray:
        """(n, q, q) array of matrix rows per signature key (-1 when absent); signature keys only."""
        if self._index is None:
            self.witnesses()
            index = np.full((self.n, self.q, self.q), -1, dtype=np.int64)
            for key, h in self.sig.items():
                index[key] = self._rows[h]
            self._index = index
        return self._index

    def empty_like(self) -> "CompactRepresentation":
        return CompactRepresentation(self.n, self.q, self.mode, self.k)

    def is_empty(self) -> bool:
        if self._sig is None:
            return self._matrix.shape[0] == 0 and not self.proj
        return not self._sig and not self.proj

    def sig_keys(self) -> list:
        return sorted(self.sig)

    def proj_keys(self) -> list:
        return sorted(self.proj, key=proj_sort_key)

    def witnesses(self) -> list[tuple]:
        """Distinct stored maps, in canonical key order (signature keys first)."""
        if self._witnesses is None and self._sig is None:
            self._witnesses = [tuple(h) for h in self._matrix.tolist()]
            self._rows = {h: r for r, h in enumerate(self._witnesses)}
        if self._witnesses is None:
            seen = {}
            for key in self.sig_keys():
                seen.setdefault(self.sig[key], None)
            for key in self.proj_keys():
                seen.setdefault(self.proj[key], None)
            self._witnesses = list(seen)
            self._rows = {h: r for r, h in enumerate(self._witnesses)}
        return self._witnesses

    def matrix(self) -> np.ndarray:
        """Witnesses as an (N, n) array, rows in ``witnesses()`` order."""
        if self._matrix is None:
            w = self.witnesses()
            flat = np.fromiter(chain.from_iterable(w), dtype=np.int64, count=len(w) * self.n)
            self._matrix = flat.reshape(len(w), self.n)
        return self._matrix

    def rows(self, maps: Iterable[tuple]) -> np.ndarray:
        """Matrix rows of the given stored maps."""
        self.witnesses()
        return self.matrix()[[self._rows[h] for h in maps]]

    def size(self) -> int:
        return len(self.witnesses())

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, CompactRepresentation)
            and (self.n, self.q, self.mode, self.k) == (other.n, other.q, other.mode, other.k)
            and self.sig == other.sig
            and self.proj == other.proj
        )

    def __repr__(self) -> str:
        extra = f", {len(self.proj)} proj keys" if self.mode == GMM else ""
        return f"<CompactRepresentation n={self.n} {self.mode} {len(self.sig)} sig keys{extra}>"

    # -- serialization ----------------------------------------------------

    def to_json(self) -> list:
        out = []
        for i, a, b in self.sig_keys():
            out.append({"key": {"kind": "sig", "i": i, "a": a, "b": b}, "map": list(self.sig[(i, a, b)])})
        for I, vals in self.proj_keys():
            out.append({"key": {"kind": "proj", "I": list(I), "vals": list(vals)}, "map": list(self.proj[(I, vals)])})
        return out

    @classmethod
    def from_json(cls, items, n: int, q: int, mode: str = MALTSEV, k: int | None = None) -> "CompactRepresentation":
        sig, proj = {}, {}
        try:
            for item in items:
                key, h = item["key"], item["map"]
                if not isinstance(h, list) or len(h) != n or not all(type(v) is int and 0 <= v < q for v in h):
                    raise MalformedRepresentation(f"bad map {h!r}")
                h = tuple(h)
                if key["kind"] == "sig":
                    t = (key["i"], key["a"], key["b"])
                    if not all(type(v) is int for v in t) or t in sig:
                        raise MalformedRepresentation(f"bad or duplicate signature key {key!r}")
                    sig[t] = h
                elif key["kind"] == "proj" and mode == GMM:
                    t = (tuple(key["I"]), tuple(key["vals"]))
                    if t in proj:
                        raise MalformedRepresentation(f"duplicate projection key {key!r}")
                    proj[t] = h
                else:
                    raise MalformedRepresentation(f"unexpected key {key!r}")
        except (KeyError, TypeError) as exc:
            raise MalformedRepresentation(f"malformed entry: {exc!r}") from exc
        return cls(n, q, mode, k, sig, proj)


def default_map(inst: Instance) -> list[int]:
    return [min(d) for d in inst.domains]


def init_representation(
    inst: Instance,
    mode: str = MALTSEV,
    k: int | None = None,
    pairkinds: dict | None = None,
) -> CompactRepresentation:
    """Representation of the edgeless instance: maps that differ from the
    all-minimum map on one coordinate (and, for GMM, on up to ``k`` coordinates)."""
    for i, d in enumerate(inst.domains):
        if not d:
            raise EmptyDomain(i)
    base = default_map(inst)
    rep = CompactRepresentation(inst.n, inst.q, mode, k)
    for i in range(inst.n):
        dom = sorted(inst.domains[i])
        for a in dom:
            e = list(base)
            e[i] = a
            e = tuple(e)
            for b in dom:
                if mode == GMM and not is_minority(pairkinds, a, b):
                    continue
                rep.sig[(i, a, b)] = e
    if mode == GMM:
        for size in range(1, k + 1):
            for I in combinations(range(inst.n), size):
                for vals in product(*(sorted(inst.domains[i]) for i in I)):
                    e = list(base)
                    for i, v in zip(I, vals):
                        e[i] = v
                    rep.proj[(I, vals)] = tuple(e)
    return rep


def signature_of(rep: CompactRepresentation) -> frozenset:
    """The signature keys of ``rep``, after checking the pairing/prefix conditions."""
    for (i, a, b), t in rep.sig.items():
        if not 0 <= i < rep.n:
            raise MalformedRepresentation(f"key {(i, a, b)}: coordinate out of range")
        if t[i] != a:
            raise MalformedRepresentation(f"key {(i, a, b)}: map has {t[i]} at coordinate {i}")
        other = rep.sig.get((i, b, a))
        if other is None:
            raise MalformedRepresentation(f"key {(i, a, b)} present but {(i, b, a)} missing")
        if t[:i] != other[:i]:
            raise MalformedRepresentation(f"keys {(i, a, b)} and {(i, b, a)} disagree below coordinate {i}")
    for (I, vals), t in rep.proj.items():
        if list(I) != sorted(set(I)) or len(I) != len(vals) or not 1 <= len(I) <= (rep.k or 0):
            raise MalformedRepresentation(f"bad projection key {(I, vals)}")
        if any(not 0 <= i < rep.n for i in I):
            raise MalformedRepresentation(f"projection key {(I, vals)}: coordinate out of range")
        if tuple(t[i] for i in I) != vals:
            raise MalformedRepresentation(f"projection key {(I, vals)}: map does not match")
    return frozenset(rep.sig)


def size_bound(n: int, q: int, mode: str = MALTSEV, k: int | None = None) -> int:
    bound = 2 * n * q * q
    if mode == GMM:
        bound += sum(comb(n, s) * q**s for s in range(1, k + 1))
    return bound


def signature_from_maps(maps: Iterable[tuple], n: int, pairkinds: dict | None = None) -> frozenset:
    """Signature of an explicit set of maps, filtered to minority pairs when ``pairkinds`` is given."""
    out = set()
    maps = list(maps)
    for i in range(n):
        groups: dict[tuple, set] = {}
        for h in maps:
            groups.setdefault(h[:i], set()).add(h[i])
        for vals in groups.values():
            for a in vals:
                for b in vals:
                    if pairkinds is None or is_minority(pairkinds, a, b):
                        out.add((i, a, b))
    return frozenset(out)


def validate_against_solutions(
    rep: CompactRepresentation,
    inst: Instance,
    budget: int = 10**6,
    pairkinds: dict | None = None,
) -> Verdict:
    """Compare ``rep`` with the exhaustively enumerated solution set of ``inst``."""
    from .oracle import brute_projections, brute_signature, enumerate_solutions

    for key, t in sorted(rep.sig.items()) + sorted(rep.proj.items(), key=lambda kv: proj_sort_key(kv[0])):
        if not inst.is_homomorphism(t):
            return Verdict(False, f"map under {key} is not a solution", ("non-member", key))
    try:
        got = signature_of(rep)
    except MalformedRepresentation as exc:
        return Verdict(False, str(exc), ("malformed", None))
    sols = enumerate_solutions(inst, budget)
    want = brute_signature(inst, budget, pairkinds if rep.mode == GMM else None, solutions=sols)
    missing = sorted(want - got)
    if missing:
        return Verdict(False, f"missing triple {missing[0]}", ("missing-triple", missing[0]))
    extra = sorted(got - want)
    if extra:
        return Verdict(False, f"extra triple {extra[0]}", ("extra-triple", extra[0]))
    if rep.mode == GMM:
        have = set(rep.proj)
        for I, vals_set in sorted(brute_projections(inst, rep.k, budget, solutions=sols).items()):
            for vals in sorted(vals_set):
                if (I, vals) not in have:
                    return Verdict(False, f"projection {vals} on {I} not covered", ("uncovered", (I, vals)))
    return Verdict(True)
