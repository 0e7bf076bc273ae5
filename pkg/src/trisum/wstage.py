"""Randomized weighting of the periphery subgraph and its sum adjustment.

Each periphery vertex gets an independent value X_v on [1.1, 2.9] and each
inner edge an independent uniform coin; the rule in `analytic` maps these
to weights in {1, 3}. Two per-vertex checks (near location of the initial
sum, occupancy of the target interval) are enforced by redrawing the
choices local to a violating vertex. Afterwards every periphery vertex
receives an integer sum addition realised by raising boundary edges from
weight 1 to 2, placing its final sum inside its target interval, away from
reserved residues, and distinct from every earlier-processed neighbour.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import analytic
from .errors import (
    DegenerateLength,
    InsufficientFW,
    InternalInconsistency,
    NoValidAddition,
    RetryExhausted,
)
from .partition import Partition, initial_outer_weights
from .profiles import ProfileConstants
from .rng import TAG_W_EDGE, TAG_W_VERTEX, stream
from .weighting import EdgeWeighting, weighted_degrees


@dataclass
class XAssignment:
    """Vertex values on W and edge coins on inner edges; NaN elsewhere."""

    x_vertex: np.ndarray  # float64[n]
    x_edge: np.ndarray    # float64[m]


@dataclass
class IntervalData:
    """Per-vertex dyadic interval data for periphery vertices.

    length[v] is a power of two, i0[v] a multiple of it, and s0[v] the
    near location of v's final sum, which lies in [i0, i0 + length).
    """

    length: np.ndarray  # int64[n], 0 outside W
    i0: np.ndarray      # int64[n]
    s0: np.ndarray      # float64[n], NaN outside W

    @property
    def i1(self) -> np.ndarray:
        return self.i0 + self.length


@dataclass
class SumAdditions:
    a: np.ndarray  # int64[n], 0 outside W


@dataclass
class WStageState:
    x: XAssignment
    omega1: np.ndarray          # int64[m], complete initial weighting
    s1: np.ndarray              # int64[n]
    intervals: IntervalData
    rounds: int = 0
    resampled: int = 0


def weigh_inner_edges(part: Partition, x: XAssignment) -> np.ndarray:
    """Weights in {1, 3} on inner edges (0 elsewhere) from the random rule."""
    g = part.graph
    w = np.zeros(g.edge_count, dtype=np.int64)
    ep = part.eprime_mask
    if ep.any():
        e0 = g.edges[ep, 0]
        e1 = g.edges[ep, 1]
        mask3 = analytic.edge_weight3_mask(
            x.x_vertex[e0], x.x_vertex[e1], x.x_edge[ep]
        )
        w[ep] = np.where(mask3, 3, 1)
    return w


def complete_initial_weighting(part: Partition, x: XAssignment) -> np.ndarray:
    """Initial weighting of the whole graph: outer table plus the inner rule."""
    w = initial_outer_weights(part)
    inner = weigh_inner_edges(part, x)
    ep = part.eprime_mask
    w[ep] = inner[ep]
    return w


def initial_sums(part: Partition, omega1: np.ndarray) -> np.ndarray:
    """Per-vertex sums of the initial weighting, cross-checked two ways.

    The direct incident-weight sum must match the closed form
    d_U + d_FU + d_W + 2 * (number of weight-3 inner edges) on W.
    """
    g = part.graph
    direct = weighted_degrees(g, omega1).sums
    ep = part.eprime_mask
    d3 = np.zeros(g.vertex_count, dtype=np.int64)
    if ep.any():
        heavy = ep & (omega1 == 3)
        d3 += np.bincount(g.edges[heavy, 0], minlength=g.vertex_count)
        d3 += np.bincount(g.edges[heavy, 1], minlength=g.vertex_count)
    w_ids = part.w_ids
    formula = part.d_u[w_ids] + part.d_fu[w_ids] + part.d_w[w_ids] + 2 * d3[w_ids]
    if not np.array_equal(direct[w_ids], formula):
        bad = w_ids[direct[w_ids] != formula][:5]
        raise InternalInconsistency(
            f"initial sums disagree with the closed form at vertices {bad.tolist()}"
        )
    return direct


def near_location_center(part: Partition, x: XAssignment) -> np.ndarray:
    """d_U + d_FU + X_v * d_W per vertex (NaN outside W)."""
    center = part.d_u + part.d_fu + x.x_vertex * part.d_w
    return center


def near_location_ok_mask(
    part: Partition, x: XAssignment, s1: np.ndarray, profile: ProfileConstants
) -> np.ndarray:
    """True where the initial sum sits within eps_loc * d_W of its center."""
    ok = np.ones(part.graph.vertex_count, dtype=bool)
    w_ids = part.w_ids
    center = near_location_center(part, x)[w_ids]
    tol = profile.eps_loc * part.d_w[w_ids]
    ok[w_ids] = np.abs(s1[w_ids] - center) <= tol
    return ok


def check_near_location(
    v: int, s1: np.ndarray, x: XAssignment, part: Partition,
    profile: ProfileConstants,
) -> bool:
    if part.in_u[v]:
        raise ValueError(f"vertex {v} is not in the periphery")
    center = part.d_u[v] + part.d_fu[v] + x.x_vertex[v] * part.d_w[v]
    return bool(abs(s1[v] - center) <= profile.eps_loc * part.d_w[v])


def compute_intervals(
    part: Partition, x: XAssignment, profile: ProfileConstants
) -> IntervalData:
    """Dyadic interval length, grid interval and near location per W vertex."""
    g = part.graph
    n = g.vertex_count
    w_mask = ~part.in_u
    d_w = part.d_w
    scale = profile.eps_len * d_w
    bad = w_mask & (scale < 1.0)
    if bad.any():
        raise DegenerateLength(np.flatnonzero(bad).tolist())
    length = np.zeros(n, dtype=np.int64)
    ids = np.flatnonzero(w_mask)
    if ids.size:
        length[ids] = 2 ** np.floor(np.log2(scale[ids])).astype(np.int64)
    s0 = np.full(n, np.nan)
    s0[ids] = (
        part.d_u[ids] + part.d_fu[ids]
        + x.x_vertex[ids] * d_w[ids] + 3.0 * length[ids]
    )
    i0 = np.zeros(n, dtype=np.int64)
    i0[ids] = np.floor(s0[ids] / length[ids]).astype(np.int64) * length[ids]
    return IntervalData(length=length, i0=i0, s0=s0)


def compute_interval_entry(
    v: int, x: XAssignment, part: Partition, profile: ProfileConstants
) -> tuple[int, int, float]:
    """(length, i0, s0) for one vertex; errors if the length degenerates."""
    if part.in_u[v]:
        raise ValueError(f"vertex {v} is not in the periphery")
    d_w = int(part.d_w[v])
    scale = profile.eps_len * d_w
    if scale < 1.0:
        raise DegenerateLength([v])
    length = int(2 ** int(np.floor(np.log2(scale))))
    s0 = float(part.d_u[v] + part.d_fu[v] + x.x_vertex[v] * d_w + 3 * length)
    i0 = int(np.floor(s0 / length)) * length
    return length, i0, s0


def occupancy_counts(part: Partition, intervals: IntervalData) -> np.ndarray:
    """For each W vertex v: how many not-larger W neighbours have s0 in I(v)."""
    g = part.graph
    n = g.vertex_count
    counts = np.zeros(n, dtype=np.int64)
    ep = part.eprime_mask
    if not ep.any():
        return counts
    a = g.edges[ep, 0]
    b = g.edges[ep, 1]
    d_w = part.d_w
    s0, i0, i1 = intervals.s0, intervals.i0, intervals.i1
    a_in_b = (d_w[a] <= d_w[b]) & (s0[a] >= i0[b]) & (s0[a] < i1[b])
    b_in_a = (d_w[b] <= d_w[a]) & (s0[b] >= i0[a]) & (s0[b] < i1[a])
    counts += np.bincount(b[a_in_b], minlength=n)
    counts += np.bincount(a[b_in_a], minlength=n)
    return counts


def check_occupancy(
    v: int, intervals: IntervalData, part: Partition, profile: ProfileConstants
) -> bool:
    if part.in_u[v]:
        raise ValueError(f"vertex {v} is not in the periphery")
    g = part.graph
    nbrs = g.neighbors(v)
    nbrs = nbrs[~part.in_u[nbrs]]
    nbrs = nbrs[part.d_w[nbrs] <= part.d_w[v]]
    inside = (
        (intervals.s0[nbrs] >= intervals.i0[v])
        & (intervals.s0[nbrs] < intervals.i1[v])
    )
    return bool(inside.sum() <= profile.frac_i * intervals.length[v])


def resample_w_stage(
    part: Partition,
    profile: ProfileConstants,
    seed: int,
    *,
    rounds: int = 150,
    rerun: int = 0,
    stall_limit: int = 25,
) -> WStageState:
    """Sample X values until both periphery checks hold everywhere.

    A violating vertex redraws its own value and the coins of its incident
    inner edges; everything else is recomputed deterministically. Because
    the scope is local, a globally skewed initial sample can leave
    violations that no local redraw can repair; a run whose violator count
    stops improving for stall_limit rounds is abandoned early.
    """
    g = part.graph
    n, m = g.vertex_count, g.edge_count
    w_mask = ~part.in_u
    ep = part.eprime_mask
    e0, e1 = (g.edges[:, 0], g.edges[:, 1]) if m else (np.empty(0, int), np.empty(0, int))

    x_vertex = np.full(n, np.nan)
    ids = np.flatnonzero(w_mask)
    x_vertex[ids] = analytic.x_from_uniform(
        stream(seed, TAG_W_VERTEX, rerun, 0).random(n)[ids]
    )
    x_edge = np.full(m, np.nan)
    x_edge[ep] = stream(seed, TAG_W_EDGE, rerun, 0).random(m)[ep]
    x = XAssignment(x_vertex=x_vertex, x_edge=x_edge)

    resampled = 0
    best = None
    stalled = 0
    for rnd in range(1, rounds + 1):
        omega1 = complete_initial_weighting(part, x)
        s1 = initial_sums(part, omega1)
        intervals = compute_intervals(part, x, profile)
        near_ok = near_location_ok_mask(part, x, s1, profile)
        occ = occupancy_counts(part, intervals)
        occ_ok = ~w_mask | (occ <= profile.frac_i * intervals.length)
        viol = w_mask & (~near_ok | ~occ_ok)
        count = int(viol.sum())
        if not count:
            return WStageState(
                x=x, omega1=omega1, s1=s1, intervals=intervals,
                rounds=rnd, resampled=resampled,
            )
        if best is None or count < best:
            best, stalled = count, 0
        else:
            stalled += 1
            if stalled >= stall_limit:
                raise RetryExhausted("w-stage", np.flatnonzero(viol).tolist(), rnd)
        fresh_x = analytic.x_from_uniform(
            stream(seed, TAG_W_VERTEX, rerun, rnd).random(n)
        )
        x.x_vertex[viol] = fresh_x[viol]
        scope_e = ep & (viol[e0] | viol[e1])
        fresh_e = stream(seed, TAG_W_EDGE, rerun, rnd).random(m)
        x.x_edge[scope_e] = fresh_e[scope_e]
        resampled += count
    raise RetryExhausted("w-stage", np.flatnonzero(viol).tolist(), rounds)


def choose_sum_additions(
    part: Partition,
    s1: np.ndarray,
    intervals: IntervalData,
    profile: ProfileConstants,
) -> SumAdditions:
    """Pick a(v) for every periphery vertex in ascending d_W order.

    The chosen target s1(v) + a(v) lies in I(v), avoids reserved residues
    mod modulus_m, and differs from the final sum of every already-processed
    periphery neighbour.
    """
    g = part.graph
    n = g.vertex_count
    w_ids = part.w_ids
    order = w_ids[np.lexsort((w_ids, part.d_w[w_ids]))]
    rank = np.full(n, -1, dtype=np.int64)
    rank[order] = np.arange(order.size)
    reserved = set(profile.reserved_residues)
    mod = profile.modulus_m
    a = np.zeros(n, dtype=np.int64)
    final = np.zeros(n, dtype=np.int64)
    done = np.zeros(n, dtype=bool)
    for v in order:
        v = int(v)
        lo = int(max(intervals.i0[v], s1[v]))
        hi = int(intervals.i1[v])
        nbrs = g.neighbors(v)
        nbrs = nbrs[(~part.in_u[nbrs]) & done[nbrs]]
        blocked = set(final[nbrs].tolist())
        chosen = None
        for t in range(lo, hi):
            if t % mod in reserved:
                continue
            if t in blocked:
                continue
            chosen = t
            break
        if chosen is None:
            raise NoValidAddition(v, {
                "i0": int(intervals.i0[v]), "i1": hi, "s1": int(s1[v]),
                "length": int(intervals.length[v]),
                "blocked_in_interval": len([t for t in blocked if lo <= t < hi]),
            })
        a[v] = chosen - int(s1[v])
        final[v] = chosen
        done[v] = True
    return SumAdditions(a=a)


def apply_additions(
    part: Partition,
    omega1: np.ndarray,
    additions: SumAdditions,
) -> tuple[EdgeWeighting, np.ndarray]:
    """Raise a(v) lowest-id F_W edges at each periphery vertex from 1 to 2.

    Every F_W edge has exactly one periphery endpoint, so the edits are
    independent across vertices. Returns the new weighting and its sums.
    """
    g = part.graph
    w2 = omega1.copy()
    fw_ids = np.flatnonzero(part.fw_mask)
    if fw_ids.size:
        e = g.edges[fw_ids]
        w_end = np.where(part.in_u[e[:, 0]], e[:, 1], e[:, 0])
        order = np.lexsort((fw_ids, w_end))
        fw_sorted = fw_ids[order]
        w_end_sorted = w_end[order]
        starts = np.searchsorted(w_end_sorted, np.arange(g.vertex_count + 1))
    for v in part.w_ids:
        v = int(v)
        need = int(additions.a[v])
        if need == 0:
            continue
        if not fw_ids.size:
            raise InsufficientFW(v, need, 0)
        mine = fw_sorted[starts[v]:starts[v + 1]]
        if mine.size < need:
            raise InsufficientFW(v, need, int(mine.size))
        picked = mine[:need]
        if not (w2[picked] == 1).all():
            raise InternalInconsistency(
                f"F_W edges at {v} were not all at weight 1 before the raise"
            )
        w2[picked] = 2
    s2 = weighted_degrees(g, w2).sums
    w_ids = part.w_ids
    # The raise must move each periphery sum by exactly its addition.
    direct1 = weighted_degrees(g, omega1).sums
    if not np.array_equal(s2[w_ids] - direct1[w_ids], additions.a[w_ids]):
        raise InternalInconsistency("sum additions were not realised exactly")
    return EdgeWeighting(weights=w2, max_weight=3), s2


def diagnostic_dump(
    part: Partition,
    x: XAssignment,
    s1: np.ndarray,
    intervals: IntervalData,
    additions: SumAdditions | None = None,
    s2: np.ndarray | None = None,
) -> list[dict]:
    """JSON-serializable per-vertex snapshot for debugging failed runs."""
    rows = []
    for v in part.w_ids:
        v = int(v)
        row = {
            "v": v,
            "x": float(x.x_vertex[v]),
            "s1": int(s1[v]),
            "s0": float(intervals.s0[v]),
            "l": int(intervals.length[v]),
            "interval": [int(intervals.i0[v]), int(intervals.i1[v])],
        }
        if additions is not None:
            row["a"] = int(additions.a[v])
        if s2 is not None:
            row["s2"] = int(s2[v])
        rows.append(row)
    return rows


def conditional_sum_profile(
    part: Partition,
    x: XAssignment,
    s1: np.ndarray,
    bin_width: float = 0.1,
) -> list[dict]:
    """Binned means of the initial sums against their design centers.

    For each X bin, reports the empirical mean of s1 over periphery
    vertices in the bin and the mean of d_U + d_FU + x_mid * d_W.
    """
    w_ids = part.w_ids
    edges = np.arange(analytic.X_LO, analytic.X_HI + bin_width / 2, bin_width)
    rows = []
    xs = x.x_vertex[w_ids]
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = w_ids[(xs >= lo) & (xs < hi)]
        if not sel.size:
            continue
        mid = (lo + hi) / 2.0
        center = part.d_u[sel] + part.d_fu[sel] + mid * part.d_w[sel]
        rows.append({
            "x_lo": float(lo),
            "x_hi": float(hi),
            "count": int(sel.size),
            "mean_s1": float(s1[sel].mean()),
            "mean_center": float(center.mean()),
        })
    return rows
