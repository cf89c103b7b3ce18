"""Exhaustive enumeration of label-canonical membership sequences."""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import OracleLimitError


@dataclass(frozen=True)
class OracleLimits:
    max_n: int = 6
    max_m: int = 3
    max_L: int = 4
    max_states: float = 1e8
    max_subset_ml: int = 12

    def check(self, n, m, L):
        if n > self.max_n or m > self.max_m or L > self.max_L:
            raise OracleLimitError(
                f"instance (n={n}, m={m}, L={L}) exceeds limits "
                f"(n<={self.max_n}, m<={self.max_m}, L<={self.max_L})")


def _all_labelings(n, m):
    return np.array(list(itertools.product(range(m), repeat=n)), dtype=np.intp).reshape(-1, n)


def _rgs_tables(lab, m):
    """For every labeling and running max ``k`` in ``-1..m-1`` (stored at
    ``k + 1``), whether it continues a restricted growth string and the new max."""
    n_lab, n = lab.shape
    ok = np.ones((n_lab, m + 1), dtype=bool)
    new_max = np.zeros((n_lab, m + 1), dtype=np.intp)
    for start in range(-1, m):
        cur = np.full(n_lab, start)
        good = np.ones(n_lab, dtype=bool)
        for i in range(n):
            v = lab[:, i]
            good &= v <= cur + 1
            cur = np.maximum(cur, v)
        ok[:, start + 1] = good
        new_max[:, start + 1] = cur
    return ok, new_max


class _FamilyGraph:
    def __init__(self, family, m, allow_empty):
        self.family = family
        self.m = m
        lab = _all_labelings(family.n, m)
        sizes = np.stack([np.bincount(r, minlength=m) for r in lab])
        lo, hi = family.size_bounds(m)
        if allow_empty:
            valid = np.ones(len(lab), dtype=bool)
            if family.balanced:
                valid = np.all((sizes >= lo) & (sizes <= hi), axis=1)
        else:
            valid = np.all((sizes >= lo) & (sizes <= hi), axis=1) & np.all(sizes > 0, axis=1)
        self.lab = lab[valid]
        dist = (self.lab[:, None, :] != self.lab[None, :, :]).sum(axis=2)
        self.adj = dist <= family.n0
        self.ok, self.new_max = _rgs_tables(self.lab, m)

    def count(self):
        """Exact number of canonical sequences, by dynamic programming."""
        m, L = self.m, self.family.L
        n_lab = len(self.lab)
        # state: (labeling index, running max + 1)
        cnt = np.zeros((n_lab, m + 1), dtype=float)
        first = self.ok[:, 0]
        np.add.at(cnt, (np.flatnonzero(first), self.new_max[first, 0] + 1), 1.0)
        for _ in range(1, L):
            nxt = np.zeros_like(cnt)
            for k in range(m + 1):
                w = cnt[:, k]
                if not w.any():
                    continue
                reach = w @ self.adj  # sum over predecessors
                good = self.ok[:, k] & (reach > 0)
                idx = np.flatnonzero(good)
                np.add.at(nxt, (idx, self.new_max[idx, k] + 1), reach[idx])
            cnt = nxt
        return float(cnt.sum())

    def sequences(self):
        L = self.family.L
        out = np.empty((L, self.family.n), dtype=np.intp)
        first = np.flatnonzero(self.ok[:, 0])

        def rec(l, prev, kmax):
            if l == L:
                yield out.copy()
                return
            cand = np.flatnonzero(self.adj[prev] & self.ok[:, kmax + 1])
            for c in cand:
                out[l] = self.lab[c]
                yield from rec(l + 1, c, self.new_max[c, kmax + 1])

        for c in first:
            out[0] = self.lab[c]
            yield from rec(1, c, self.new_max[c, 0])


def count_family(family, m, allow_empty=False):
    return _FamilyGraph(family, m, allow_empty).count()


def enumerate_family(family, m, allow_empty=False, limits=None):
    """Yield every label-canonical sequence in ``family`` with ``m`` labels.

    Sequences are ``(L, n)`` integer arrays in lexicographic order.  A
    sequence is canonical when its labels, read slice by slice and node by
    node, form a restricted growth string; each partition sequence is
    therefore emitted exactly once.  With ``allow_empty=False`` (the
    default) every class is occupied at every slice.
    """
    limits = OracleLimits() if limits is None else limits
    limits.check(family.n, m, family.L)
    if m ** family.n > 1e6:
        raise OracleLimitError(f"m^n = {m ** family.n} labelings per slice is too many")
    graph = _FamilyGraph(family, m, allow_empty)
    total = graph.count()
    if total > limits.max_states:
        raise OracleLimitError(
            f"enumeration would visit {total:.3g} sequences (limit {limits.max_states:.3g})",
            estimated_states=total)
    yield from graph.sequences()
