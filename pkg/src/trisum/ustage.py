"""Final adjustment of core-vertex sums via owned-edge weight changes.

Each core vertex owns the core-internal edges directed out of it by an
Euler tour (an auxiliary vertex absorbs odd degrees), so ownership sets
are disjoint and each covers at least half the core degree minus one.
Processing core vertices in ascending total degree, each one moves its sum
by +-1 steps on owned edges to the smallest reachable multiple of the
modulus whose residue pair is not already claimed by a comparable
neighbour, then stays inside that pair for the rest of the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InternalInconsistency, NoValidPair
from .partition import Partition, j_interval, n_u_leq_all
from .profiles import ProfileConstants
from .weighting import EdgeWeighting, conflicts, weighted_degrees


@dataclass
class EStar:
    """Disjoint owned-edge sets over the core, as an edge -> owner map."""

    owner: np.ndarray  # int64[m]; -1 where unowned

    def owned_edges(self, u: int) -> np.ndarray:
        return np.flatnonzero(self.owner == u)

    def owned_lists(self, n: int) -> list[np.ndarray]:
        """Owned edge ids per vertex, grouped once for fast lookup."""
        eids = np.flatnonzero(self.owner >= 0)
        owners = self.owner[eids]
        order = np.lexsort((eids, owners))
        eids, owners = eids[order], owners[order]
        starts = np.searchsorted(owners, np.arange(n + 1))
        return [eids[starts[v]:starts[v + 1]] for v in range(n)]

    def owned_count(self, n: int) -> np.ndarray:
        owned = self.owner[self.owner >= 0]
        return np.bincount(owned, minlength=n)


def build_estar(part: Partition) -> EStar:
    """Orient the core-internal edges along Euler tours and assign owners.

    An auxiliary vertex is joined to every odd-degree core vertex so each
    component of the augmented graph is eulerian; tours start at the
    lowest-id real vertex of their component. Owned edges are the real
    edges directed out of a vertex; the auxiliary edges are discarded.
    """
    g = part.graph
    owner = np.full(g.edge_count, -1, dtype=np.int64)
    eu_ids = np.flatnonzero(part.eu_mask)
    if not eu_ids.size:
        return EStar(owner=owner)

    aux = g.vertex_count  # virtual vertex id
    # incidence lists: (neighbor, edge_key); real edges keyed by id,
    # auxiliary edges by -(k+1).
    inc: dict[int, list[tuple[int, int]]] = {}
    deg: dict[int, int] = {}

    def add(a: int, b: int, key: int) -> None:
        inc.setdefault(a, []).append((b, key))
        inc.setdefault(b, []).append((a, key))
        deg[a] = deg.get(a, 0) + 1
        deg[b] = deg.get(b, 0) + 1

    for e in eu_ids:
        u, v = int(g.edges[e, 0]), int(g.edges[e, 1])
        add(u, v, int(e))
    odd = sorted(v for v in deg if v != aux and deg[v] % 2 == 1)
    for k, v in enumerate(odd):
        add(aux, v, -(k + 1))
    for lst in inc.values():
        lst.sort()

    used: set[int] = set()
    visited: set[int] = set()
    for start in sorted(v for v in inc if v != aux):
        if start in visited:
            continue
        circuit = _euler_circuit(inc, start, used, visited)
        # orient each edge along the tour; owner is the tail of real edges
        for (a, key) in circuit:
            if key >= 0:
                if owner[key] != -1:
                    raise InternalInconsistency(f"edge {key} oriented twice")
                owner[key] = a
    if (owner[eu_ids] < 0).any():
        raise InternalInconsistency("some core edges were never traversed")
    return EStar(owner=owner)


def _euler_circuit(
    inc: dict[int, list[tuple[int, int]]], start: int,
    used: set[int], visited: set[int],
) -> list[tuple[int, int]]:
    """Hierholzer tour; returns (tail, edge_key) pairs in tour order."""
    ptr = {v: 0 for v in inc}
    stack: list[int] = [start]
    popped: list[int] = []
    while stack:
        v = stack[-1]
        lst = inc.get(v, [])
        advanced = False
        while ptr.get(v, 0) < len(lst):
            nbr, key = lst[ptr[v]]
            ptr[v] += 1
            if key in used:
                continue
            used.add(key)
            stack.append(nbr)
            advanced = True
            break
        if not advanced:
            popped.append(stack.pop())
    tour_vertices = popped[::-1]
    visited.update(tour_vertices)
    # recover edge keys along consecutive tour vertices
    pair_key: dict[tuple[int, int], list[int]] = {}
    for v, lst in inc.items():
        for nbr, key in lst:
            if v < nbr:
                pair_key.setdefault((v, nbr), []).append(key)
    seen: set[int] = set()
    out: list[tuple[int, int]] = []
    for a, b in zip(tour_vertices[:-1], tour_vertices[1:]):
        lo, hi = (a, b) if a < b else (b, a)
        for key in pair_key[(lo, hi)]:
            if key not in seen:
                seen.add(key)
                out.append((a, key))
                break
        else:
            raise InternalInconsistency("tour step without an unused edge")
    return out


def estar_bounds_hold(part: Partition, estar: EStar) -> bool:
    """Ownership disjointness is structural; check coverage and size bound."""
    eu = part.eu_mask
    if eu.any() and (estar.owner[eu] < 0).any():
        return False
    if (~eu).any() and (estar.owner[~eu] >= 0).any():
        return False
    owned = estar.owned_count(part.graph.vertex_count)
    u = part.u_ids
    if not u.size:
        return True
    return bool((owned[u] >= 0.5 * part.d_u[u] - 1).all())


@dataclass
class UStageResult:
    omega3: EdgeWeighting
    s3: np.ndarray
    pair_base: np.ndarray   # int64[n]; -1 where unset
    trace: list[dict] = field(default_factory=list)

    def trace_jsonl(self) -> str:
        """One JSON object per processed core vertex, in processing order."""
        import json

        return "\n".join(json.dumps(t) for t in self.trace) + "\n"


def finalize_u(
    part: Partition,
    omega2: EdgeWeighting,
    estar: EStar,
    profile: ProfileConstants,
) -> UStageResult:
    """Assign residue pairs to core vertices and realise them by edge flips.

    Owned edges toward processed neighbours have a forced direction (the
    one keeping the neighbour inside its pair); unprocessed neighbours
    allow either direction. The smallest reachable pair base not claimed
    by a processed comparable neighbour is chosen; forced edges are
    flipped before free ones, each in ascending edge id.
    """
    g = part.graph
    mod = profile.modulus_m
    w = omega2.weights.copy()
    s = weighted_degrees(g, w).sums.copy()
    n = g.vertex_count
    pair_base = np.full(n, -1, dtype=np.int64)
    processed = np.zeros(n, dtype=bool)
    trace: list[dict] = []

    u_ids = part.u_ids
    order = u_ids[np.lexsort((u_ids, g.degrees[u_ids]))]
    nu_cache = n_u_leq_all(part, profile)
    owned_lists = estar.owned_lists(n)

    for u in order:
        u = int(u)
        owned = [int(e) for e in owned_lists[u]]
        forced_plus: list[tuple[int, int]] = []
        forced_minus: list[tuple[int, int]] = []
        free: list[tuple[int, int]] = []
        for e in owned:
            a, b = int(g.edges[e, 0]), int(g.edges[e, 1])
            v = b if a == u else a
            if processed[v]:
                base = int(pair_base[v])
                if s[v] == base:
                    forced_plus.append((e, v))
                elif s[v] == base + 1:
                    forced_minus.append((e, v))
                else:
                    raise InternalInconsistency(
                        f"processed vertex {v} drifted out of its pair"
                    )
            else:
                free.append((e, v))
        n_plus = len(forced_plus) + len(free)
        n_minus = len(forced_minus) + len(free)
        lo = int(s[u]) - n_minus
        hi = int(s[u]) + n_plus
        blocked = {
            int(pair_base[v]) for v in nu_cache[u]
            if processed[v]
        }
        target = None
        first = -(-lo // mod) * mod  # smallest multiple of mod >= lo
        for cand in range(first, hi + 1, mod):
            if cand not in blocked:
                target = cand
                break
        if target is None:
            raise NoValidPair(u, {
                "reachable": (lo, hi),
                "sum": int(s[u]),
                "owned": len(owned),
                "blocked_pairs": sorted(blocked),
                "comparable_neighbours": len(nu_cache[u]),
            })
        shift = target - int(s[u])
        flipped: list[int] = []
        if shift > 0:
            pool = sorted(forced_plus) + sorted(free)
            step = 1
        else:
            pool = sorted(forced_minus) + sorted(free)
            step = -1
        for e, v in pool[: abs(shift)]:
            if not 1 <= w[e] + step <= 3:
                raise InternalInconsistency(f"flip would leave [1,3] at edge {e}")
            w[e] += step
            s[g.edges[e, 0]] += step
            s[g.edges[e, 1]] += step
            flipped.append(e)
        if int(s[u]) != target:
            raise InternalInconsistency(f"vertex {u} missed its target sum")
        pair_base[u] = target
        processed[u] = True
        trace.append({
            "u": u, "reachable": [lo, hi], "target": target,
            "flipped": flipped,
        })

    omega3 = EdgeWeighting(weights=w, max_weight=3)
    s3 = weighted_degrees(g, omega3).sums
    if not np.array_equal(s3, s):
        raise InternalInconsistency("tracked sums disagree with a recount")
    return UStageResult(omega3=omega3, s3=s3, pair_base=pair_base, trace=trace)


@dataclass
class VerifyReport:
    conflict_edges: list[int]
    bad_core_residues: list[int]
    bad_periphery_residues: list[int]
    changed_periphery_sums: list[int]
    range_violations: list[int]
    interval_violations: list[int]
    strict_ranges: bool = False

    @property
    def ok(self) -> bool:
        hard = (
            not self.conflict_edges
            and not self.bad_core_residues
            and not self.bad_periphery_residues
            and not self.changed_periphery_sums
        )
        if self.strict_ranges:
            hard = hard and not self.range_violations and not self.interval_violations
        return hard

    def summary(self) -> str:
        if self.ok:
            return "verification passed"
        return (
            f"verification failed: {len(self.conflict_edges)} conflicts, "
            f"{len(self.bad_core_residues)} bad core residues, "
            f"{len(self.bad_periphery_residues)} bad periphery residues, "
            f"{len(self.changed_periphery_sums)} drifted periphery sums"
        )

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "conflict_edges": self.conflict_edges,
            "bad_core_residues": self.bad_core_residues,
            "bad_periphery_residues": self.bad_periphery_residues,
            "changed_periphery_sums": self.changed_periphery_sums,
            "range_violations": self.range_violations,
            "interval_violations": self.interval_violations,
            "strict_ranges": self.strict_ranges,
        }


def final_verify(
    part: Partition,
    omega3: EdgeWeighting,
    profile: ProfileConstants,
    expected_periphery_sums: np.ndarray | None = None,
    strict_ranges: bool = False,
) -> VerifyReport:
    """Check the final weighting: conflicts, residue classes, sum stability.

    Range and envelope membership of core sums are warning-level unless
    strict_ranges is set (they are only guaranteed in the full-scale
    constant regime).
    """
    g = part.graph
    s3 = weighted_degrees(g, omega3).sums
    mod = profile.modulus_m
    reserved = set(profile.reserved_residues)

    conflict_edges = conflicts(g, omega3).tolist()
    bad_core = [
        int(u) for u in part.u_ids if int(s3[u]) % mod not in reserved
    ]
    bad_periph = [
        int(v) for v in part.w_ids if int(s3[v]) % mod in reserved
    ]
    changed = []
    if expected_periphery_sums is not None:
        changed = [
            int(v) for v in part.w_ids
            if int(s3[v]) != int(expected_periphery_sums[v])
        ]
    range_bad = [
        int(u) for u in part.u_ids
        if not g.degrees[u] <= s3[u] <= 2 * g.degrees[u]
    ]
    interval_bad = []
    for u in part.u_ids:
        ju = j_interval(int(u), part, profile)
        if not ju.lo <= s3[u] <= ju.hi:
            interval_bad.append(int(u))
    return VerifyReport(
        conflict_edges=conflict_edges,
        bad_core_residues=bad_core,
        bad_periphery_residues=bad_periph,
        changed_periphery_sums=changed,
        range_violations=range_bad,
        interval_violations=interval_bad,
        strict_ranges=strict_ranges,
    )


def distinguishing_cases_hold(
    part: Partition, profile: ProfileConstants, s3: np.ndarray,
    pair_base: np.ndarray,
) -> bool:
    """Every core-core edge falls into one of the three separating cases.

    Either the degrees differ by more than a factor two, or the J envelopes
    are disjoint, or the two endpoints carry distinct residue pairs.
    """
    g = part.graph
    eu_ids = np.flatnonzero(part.eu_mask)
    for e in eu_ids:
        a, b = int(g.edges[e, 0]), int(g.edges[e, 1])
        if g.degrees[a] > g.degrees[b]:
            a, b = b, a
        if g.degrees[a] < 0.5 * g.degrees[b]:
            continue
        ja = j_interval(a, part, profile)
        jb = j_interval(b, part, profile)
        if not ja.overlaps(jb):
            continue
        if pair_base[a] != pair_base[b]:
            continue
        return False
    return True
