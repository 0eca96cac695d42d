"""Plain-Python reference computations used as test oracles.

Nothing here calls into the library beyond reading operation tables, so a bug
in congruence generation or in the radical machinery cannot hide itself.
"""

from __future__ import annotations

import itertools

import numpy as np


class Group:
    """A group read off a table: ``mul[a][b]``, ``inv[a]``, ``unit``."""

    def __init__(self, A):
        n = A.size
        grid = np.indices((n, n))
        self.n = n
        self.mul = np.asarray(A.apply("mul", grid[0], grid[1])).tolist()
        self.inv = np.asarray(A.apply("inv", np.arange(n))).tolist()
        self.unit = A.unit

    def comm(self, a, b):
        m, i = self.mul, self.inv
        return m[m[a][b]][m[i[a]][i[b]]]

    def subgroup(self, gens) -> frozenset:
        out = {self.unit, *gens}
        frontier = list(out)
        while frontier:
            new = []
            for a in frontier:
                for b in list(out):
                    for c in (self.mul[a][b], self.mul[b][a]):
                        if c not in out:
                            out.add(c)
                            new.append(c)
            frontier = new
        return frozenset(out)

    def normal_closure(self, gens) -> frozenset:
        conj = {self.mul[self.mul[g][x]][self.inv[g]] for x in gens for g in range(self.n)}
        return self.subgroup(conj)

    def is_normal_subgroup(self, S) -> bool:
        if self.unit not in S:
            return False
        if any(self.mul[a][self.inv[b]] not in S for a in S for b in S):
            return False
        return all(self.mul[self.mul[g][s]][self.inv[g]] in S for g in range(self.n) for s in S)

    def normal_subgroups(self) -> list[frozenset]:
        # every normal subgroup is the normal closure of some of its elements; closing
        # up from single generators and joining gives all of them on these sizes
        found = {frozenset([self.unit])}
        singles = {self.normal_closure([a]) for a in range(self.n)}
        found |= singles
        changed = True
        while changed:
            changed = False
            for S, T in itertools.product(list(found), list(found)):
                J = self.subgroup(S | T)
                if J not in found:
                    found.add(J)
                    changed = True
        return sorted(found, key=lambda S: (len(S), sorted(S)))

    def commutator(self, M, N) -> frozenset:
        """``[M, N]``: generated by ``m n m⁻¹ n⁻¹``."""
        return self.subgroup({self.comm(m, n) for m in M for n in N})

    def lower_central(self, k: int) -> frozenset:
        G = frozenset(range(self.n))
        cur = G
        for _ in range(k - 1):
            cur = self.commutator(cur, G)
        return cur

    def is_abelian(self) -> bool:
        return all(self.mul[a][b] == self.mul[b][a] for a in range(self.n) for b in range(self.n))


def brute_force_normals(G: Group) -> list[frozenset]:
    """All normal subgroups by checking every subset containing the unit."""
    others = [a for a in range(G.n) if a != G.unit]
    out = []
    for bits in itertools.product((0, 1), repeat=len(others)):
        S = frozenset([G.unit] + [a for a, b in zip(others, bits) if b])
        if G.n % len(S) == 0 and G.is_normal_subgroup(S):
            out.append(S)
    return sorted(out, key=lambda S: (len(S), sorted(S)))


def loop_axioms(table) -> list[str]:
    """Violated loop axioms of a Latin square with identity 0 (empty when it is a loop)."""
    t = [list(r) for r in table]
    n = len(t)
    bad = []
    if any(sorted(row) != list(range(n)) for row in t):
        bad.append("rows are not permutations")
    if any(sorted(t[i][j] for i in range(n)) != list(range(n)) for j in range(n)):
        bad.append("columns are not permutations")
    if any(t[0][x] != x or t[x][0] != x for x in range(n)):
        bad.append("0 is not a two-sided identity")
    return bad


def associativity_failures(table) -> list[tuple[int, int, int]]:
    n = len(table)
    return [(a, b, c) for a, b, c in itertools.product(range(n), repeat=3)
            if table[table[a][b]][c] != table[a][table[b][c]]]


def quads_count(G: Group, M, N) -> int:
    """``|R_M □ R_N|`` over the join, counted straight from the membership rule."""
    J = sorted(G.subgroup(set(M) | set(N)))

    def rel(S, a, b):
        return G.mul[a][G.inv[b]] in S

    return sum(1 for x, y, z, t in itertools.product(J, repeat=4)
               if rel(M, x, z) and rel(M, y, t) and rel(N, x, y) and rel(N, z, t))


def perm_matrix(p) -> np.ndarray:
    n = len(p)
    P = np.zeros((n, n), dtype=int)
    for i, j in enumerate(p):
        P[j, i] = 1
    return P
