"""Core/periphery split of the vertex set and the boundary edge subsets.

Stage 1 places each vertex in the adjustment core U independently; stage 2
places each boundary edge in F_W; stage 3 draws a level for every core
vertex and places boundary edges in F_U with level-dependent probability.
After each stage the per-vertex concentration constraints are checked and
the independent choices in a violated constraint's scope are redrawn until
every constraint holds (bad-event resampling with a whole-stage retry
fallback).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RetryExhausted
from .graph import Graph, IdSet
from .profiles import ProfileConstants, check_partition_feasible
from .rng import TAG_PART_FU, TAG_PART_FW, TAG_PART_LEVEL, TAG_PART_U, stream


@dataclass(frozen=True)
class JInterval:
    """Envelope that ends up containing a core vertex's final sum."""

    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def overlaps(self, other: "JInterval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi


@dataclass
class Partition:
    graph: Graph
    in_u: np.ndarray        # bool[n]
    levels: np.ndarray      # int64[n], -1 outside U
    f_mask: np.ndarray      # bool[m], edges between U and W
    fw_mask: np.ndarray     # bool[m], F_W subset of F
    fu_mask: np.ndarray     # bool[m], F_U subset of F'
    # cached per-vertex counts (recomputable from the masks)
    d_u: np.ndarray = field(default=None)
    d_fw: np.ndarray = field(default=None)
    d_fprime: np.ndarray = field(default=None)
    d_fu: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.d_u is None:
            g = self.graph
            self.d_u = _count_neighbors_in(g, self.in_u)
            self.d_fw = _count_incident(g, self.fw_mask)
            self.d_fprime = _count_incident(g, self.fprime_mask)
            self.d_fu = _count_incident(g, self.fu_mask)

    @property
    def fprime_mask(self) -> np.ndarray:
        return self.f_mask & ~self.fw_mask

    @property
    def d_w(self) -> np.ndarray:
        return self.graph.degrees - self.d_u

    @property
    def u_ids(self) -> np.ndarray:
        return np.flatnonzero(self.in_u)

    @property
    def w_ids(self) -> np.ndarray:
        return np.flatnonzero(~self.in_u)

    @property
    def u_set(self) -> IdSet:
        return IdSet(self.in_u.copy())

    @property
    def w_set(self) -> IdSet:
        return IdSet(~self.in_u)

    @property
    def eprime_mask(self) -> np.ndarray:
        """Edges inside the periphery W."""
        e = self.graph.edges
        return ~self.in_u[e[:, 0]] & ~self.in_u[e[:, 1]]

    @property
    def eu_mask(self) -> np.ndarray:
        """Edges inside the core U."""
        e = self.graph.edges
        return self.in_u[e[:, 0]] & self.in_u[e[:, 1]]

    def describe(self) -> dict:
        return {
            "n_u": int(self.in_u.sum()),
            "n_w": int((~self.in_u).sum()),
            "f": int(self.f_mask.sum()),
            "f_w": int(self.fw_mask.sum()),
            "f_u": int(self.fu_mask.sum()),
            "e_u": int(self.eu_mask.sum()),
            "e_prime": int(self.eprime_mask.sum()),
        }

    def debug_dump(self) -> str:
        """Labeled vertex and edge lists, one item per line."""
        lines = ["# vertices: id side level"]
        for v in range(self.graph.vertex_count):
            side = "U" if self.in_u[v] else "W"
            lines.append(f"{v} {side} {int(self.levels[v])}")
        lines.append("# edges: id u v label")
        labels = np.full(self.graph.edge_count, "E'", dtype=object)
        labels[self.f_mask] = "F"
        labels[self.fw_mask] = "F_W"
        labels[self.fu_mask] = "F_U"
        labels[self.eu_mask] = "E(U)"
        for e, (u, v) in enumerate(self.graph.edges):
            lines.append(f"{e} {u} {v} {labels[e]}")
        return "\n".join(lines) + "\n"


def _count_neighbors_in(g: Graph, vmask: np.ndarray) -> np.ndarray:
    """d_A(v) for every v, where A is the masked vertex set."""
    n = g.vertex_count
    if not g.edge_count:
        return np.zeros(n, dtype=np.int64)
    e0, e1 = g.edges[:, 0], g.edges[:, 1]
    return (
        np.bincount(e0[vmask[e1]], minlength=n)
        + np.bincount(e1[vmask[e0]], minlength=n)
    ).astype(np.int64)


def _count_incident(g: Graph, emask: np.ndarray) -> np.ndarray:
    """Per-vertex count of incident edges inside the masked edge set."""
    n = g.vertex_count
    if not g.edge_count:
        return np.zeros(n, dtype=np.int64)
    e0, e1 = g.edges[:, 0], g.edges[:, 1]
    return (
        np.bincount(e0[emask], minlength=n) + np.bincount(e1[emask], minlength=n)
    ).astype(np.int64)


def j_interval_bounds(
    deg: float, d_fprime: float, d_fw: float, d_u: float, level: int,
    profile: ProfileConstants,
) -> JInterval:
    """J interval from raw per-vertex counts (usable on synthetic numbers)."""
    base = deg + (level / profile.m_levels) * d_fprime
    lo = base - profile.eps_fu * deg
    hi = base + profile.eps_fu * deg + d_fw + 2.0 * d_u
    return JInterval(lo=lo, hi=hi)


def j_interval(u: int, part: Partition, profile: ProfileConstants) -> JInterval:
    if not part.in_u[u]:
        raise ValueError(f"vertex {u} is not in the core")
    return j_interval_bounds(
        float(part.graph.degrees[u]),
        float(part.d_fprime[u]),
        float(part.d_fw[u]),
        float(part.d_u[u]),
        int(part.levels[u]),
        profile,
    )


def n_u_leq(u: int, part: Partition, profile: ProfileConstants) -> np.ndarray:
    """Core neighbours of u with comparable degree and overlapping J interval."""
    g = part.graph
    if not part.in_u[u]:
        raise ValueError(f"vertex {u} is not in the core")
    nbrs = g.neighbors(u)
    cand = nbrs[part.in_u[nbrs]]
    if not cand.size:
        return cand
    deg_u = g.degrees[u]
    keep = (g.degrees[cand] >= 0.5 * deg_u) & (g.degrees[cand] <= deg_u)
    cand = cand[keep]
    if not cand.size:
        return cand
    ju = j_interval(u, part, profile)
    out = [int(v) for v in cand if j_interval(int(v), part, profile).overlaps(ju)]
    return np.asarray(sorted(out), dtype=np.int64)


def _j_bound_arrays(
    g: Graph, in_u: np.ndarray, levels: np.ndarray,
    d_fprime: np.ndarray, d_fw: np.ndarray, d_u: np.ndarray,
    profile: ProfileConstants,
) -> tuple[np.ndarray, np.ndarray]:
    deg = g.degrees.astype(np.float64)
    base = deg + (levels / profile.m_levels) * d_fprime
    lo = base - profile.eps_fu * deg
    hi = base + profile.eps_fu * deg + d_fw + 2.0 * d_u
    return lo, hi


def n_u_leq_all(part: Partition, profile: ProfileConstants) -> list[np.ndarray]:
    """N^U_<=(u) for every core vertex at once, grouped from core-core edges."""
    g = part.graph
    n = g.vertex_count
    empty = np.empty(0, dtype=np.int64)
    out: list[np.ndarray] = [empty] * n
    e0, e1 = (g.edges[:, 0], g.edges[:, 1]) if g.edge_count else (None, None)
    if e0 is None:
        return out
    uu = part.in_u[e0] & part.in_u[e1]
    if not uu.any():
        return out
    a, b = e0[uu], e1[uu]
    jlo, jhi = _j_bound_arrays(
        g, part.in_u, part.levels, part.d_fprime, part.d_fw, part.d_u, profile
    )
    overlap = (jlo[a] <= jhi[b]) & (jlo[b] <= jhi[a])
    deg = g.degrees
    b_for_a = overlap & (deg[b] >= 0.5 * deg[a]) & (deg[b] <= deg[a])
    a_for_b = overlap & (deg[a] >= 0.5 * deg[b]) & (deg[a] <= deg[b])
    hosts = np.concatenate([a[b_for_a], b[a_for_b]])
    members = np.concatenate([b[b_for_a], a[a_for_b]])
    order = np.lexsort((members, hosts))
    hosts, members = hosts[order], members[order]
    starts = np.searchsorted(hosts, np.arange(n + 1))
    for v in np.unique(hosts):
        out[int(v)] = members[starts[v]:starts[v + 1]]
    return out


def _n_u_leq_counts(
    g: Graph, in_u: np.ndarray, levels: np.ndarray,
    d_fprime: np.ndarray, d_fw: np.ndarray, d_u: np.ndarray,
    profile: ProfileConstants,
) -> np.ndarray:
    """|N^U_<=(u)| for every core vertex, vectorized over core-core edges."""
    n = g.vertex_count
    counts = np.zeros(n, dtype=np.int64)
    if not g.edge_count:
        return counts
    e0, e1 = g.edges[:, 0], g.edges[:, 1]
    uu = in_u[e0] & in_u[e1]
    if not uu.any():
        return counts
    a, b = e0[uu], e1[uu]
    jlo, jhi = _j_bound_arrays(g, in_u, levels, d_fprime, d_fw, d_u, profile)
    overlap = (jlo[a] <= jhi[b]) & (jlo[b] <= jhi[a])
    deg = g.degrees
    b_counts_for_a = overlap & (deg[b] >= 0.5 * deg[a]) & (deg[b] <= deg[a])
    a_counts_for_b = overlap & (deg[a] >= 0.5 * deg[b]) & (deg[a] <= deg[b])
    counts += np.bincount(a[b_counts_for_a], minlength=n)
    counts += np.bincount(b[a_counts_for_b], minlength=n)
    return counts


def initial_outer_weights(part: Partition) -> np.ndarray:
    """Initial weights on edges outside W: 2 on E(U) and F_U, 1 on F minus F_U.

    Edges inside W are left at 0; they are weighted by the periphery stage.
    """
    w = np.zeros(part.graph.edge_count, dtype=np.int64)
    w[part.eu_mask] = 2
    w[part.fu_mask] = 2
    w[part.f_mask & ~part.fu_mask] = 1
    return w


@dataclass
class SampleStats:
    rounds: dict = field(default_factory=dict)
    resampled: int = 0
    retries: int = 0


def sample_partition(
    g: Graph,
    profile: ProfileConstants,
    seed: int,
    *,
    stage_rounds: int = 80,
    global_retries: int = 2,
    stats: SampleStats | None = None,
) -> Partition:
    """Sample a partition satisfying all five constraint families.

    Stage order: core memberships first, then F_W coins, then levels and
    F_U coins jointly. A violated constraint redraws only the choices in
    its scope; a stage that cannot stabilize within the round budget
    restarts the whole sample with fresh streams.
    """
    check_partition_feasible(g, profile)
    last_exc: RetryExhausted | None = None
    for attempt in range(global_retries + 1):
        if stats is not None:
            stats.retries = attempt
        try:
            return _sample_once(g, profile, seed, attempt, stage_rounds, stats)
        except RetryExhausted as exc:
            last_exc = exc
    assert last_exc is not None
    raise last_exc


def _sample_once(
    g: Graph, profile: ProfileConstants, seed: int, attempt: int,
    stage_rounds: int, stats: SampleStats | None,
) -> Partition:
    n, m = g.vertex_count, g.edge_count
    deg = g.degrees
    e0, e1 = (g.edges[:, 0], g.edges[:, 1]) if m else (np.empty(0, int), np.empty(0, int))

    def note(stage: str, rounds: int, resampled: int) -> None:
        if stats is not None:
            stats.rounds[stage] = rounds
            stats.resampled += resampled

    # Stage 1: core memberships under the degree-concentration constraint.
    in_u = stream(seed, TAG_PART_U, attempt, 0).random(n) < profile.p_u
    resampled = 0
    for rnd in range(1, stage_rounds + 1):
        d_u = _count_neighbors_in(g, in_u)
        viol = np.abs(d_u - profile.p_u * deg) > profile.eps_u * deg
        if not viol.any():
            note("u", rnd, resampled)
            break
        scope = np.zeros(n, dtype=bool)
        if m:
            scope[e0[viol[e1]]] = True
            scope[e1[viol[e0]]] = True
        fresh = stream(seed, TAG_PART_U, attempt, rnd).random(n) < profile.p_u
        in_u[scope] = fresh[scope]
        resampled += int(scope.sum())
    else:
        viol_ids = np.flatnonzero(viol)
        raise RetryExhausted("partition:u", viol_ids.tolist(), stage_rounds)

    d_u = _count_neighbors_in(g, in_u)
    d_w = deg - d_u
    f_mask = in_u[e0] ^ in_u[e1] if m else np.zeros(0, dtype=bool)

    # Stage 2: F_W coins under both degree constraints.
    coins = stream(seed, TAG_PART_FW, attempt, 0).random(m)
    resampled = 0
    for rnd in range(1, stage_rounds + 1):
        fw_mask = f_mask & (coins < profile.p_fw)
        d_fw = _count_incident(g, fw_mask)
        viol_w = ~in_u & (np.abs(d_fw - profile.p_fw * d_u) > profile.eps_fw * d_u)
        viol_u = in_u & (np.abs(d_fw - profile.p_fw * d_w) > profile.eps_fw * d_w)
        viol = viol_w | viol_u
        if not viol.any():
            note("fw", rnd, resampled)
            break
        scope_e = f_mask & (viol[e0] | viol[e1])
        fresh = stream(seed, TAG_PART_FW, attempt, rnd).random(m)
        coins[scope_e] = fresh[scope_e]
        resampled += int(scope_e.sum())
    else:
        raise RetryExhausted("partition:fw", np.flatnonzero(viol).tolist(), stage_rounds)

    fw_mask = f_mask & (coins < profile.p_fw)
    d_fw = _count_incident(g, fw_mask)
    fprime_mask = f_mask & ~fw_mask
    d_fprime = _count_incident(g, fprime_mask)

    # Stage 3: levels and F_U coins jointly.
    mlev = profile.m_levels
    levels = stream(seed, TAG_PART_LEVEL, attempt, 0).integers(0, mlev, size=n)
    levels[~in_u] = -1
    unif = stream(seed, TAG_PART_FU, attempt, 0).random(m)
    u_end = np.where(in_u[e0], e0, e1) if m else np.empty(0, int)
    w_end = np.where(in_u[e0], e1, e0) if m else np.empty(0, int)
    mean_frac = (1.0 - 1.0 / mlev) / 2.0
    resampled = 0
    for rnd in range(1, stage_rounds + 1):
        fu_mask = fprime_mask & (unif < levels[u_end] / mlev)
        d_fu = _count_incident(g, fu_mask)
        viol_a4 = in_u & (
            np.abs(d_fu - (levels / mlev) * d_fprime) > profile.eps_fu * deg
        )
        viol_a5 = ~in_u & (
            np.abs(d_fu - mean_frac * d_fprime) > profile.eps_fu * d_fprime
        )
        nu_counts = _n_u_leq_counts(g, in_u, levels, d_fprime, d_fw, d_u, profile)
        viol_a6 = in_u & (nu_counts > profile.frac_nu * d_u)
        viol_levels = viol_a4 | viol_a6
        viol = viol_levels | viol_a5
        if not viol.any():
            note("fu", rnd, resampled)
            break
        fresh_lv = stream(seed, TAG_PART_LEVEL, attempt, rnd).integers(0, mlev, size=n)
        levels[viol_levels] = fresh_lv[viol_levels]
        scope_e = fprime_mask & (viol_levels[u_end] | viol_a5[w_end])
        fresh_u = stream(seed, TAG_PART_FU, attempt, rnd).random(m)
        unif[scope_e] = fresh_u[scope_e]
        resampled += int(scope_e.sum()) + int(viol_levels.sum())
    else:
        raise RetryExhausted("partition:fu", np.flatnonzero(viol).tolist(), stage_rounds)

    fu_mask = fprime_mask & (unif < levels[u_end] / mlev)
    return Partition(
        graph=g, in_u=in_u, levels=levels,
        f_mask=f_mask, fw_mask=fw_mask, fu_mask=fu_mask,
    )


@dataclass
class AuditReport:
    ok: bool
    failures: dict[str, list[int]]

    def summary(self) -> str:
        if self.ok:
            return "partition audit: all constraint families hold"
        parts = ", ".join(f"{k}: {len(v)}" for k, v in self.failures.items() if v)
        return f"partition audit FAILED ({parts})"


def audit_partition(part: Partition, profile: ProfileConstants) -> AuditReport:
    """Recompute every constraint family from the raw sets, per vertex.

    Deliberately a separate, per-vertex computation path from the
    vectorized sampler so it can serve as an independent check.
    """
    g = part.graph
    in_u = part.in_u
    fw, fu, fprime = part.fw_mask, part.fu_mask, part.fprime_mask
    fail: dict[str, list[int]] = {
        "u_degree": [], "fw_in_w": [], "fw_in_u": [],
        "fu_in_u": [], "fu_in_w": [], "nu_leq": [],
        "structure": [],
    }
    if (part.fw_mask & part.fu_mask).any():
        fail["structure"].append(-1)
    if not np.array_equal(part.fw_mask | part.fprime_mask, part.f_mask):
        fail["structure"].append(-2)
    for v in range(g.vertex_count):
        deg = int(g.degrees[v])
        nbrs = g.neighbors(v)
        inc = g.incident_edges(v)
        d_u = int(in_u[nbrs].sum())
        d_fw = int(fw[inc].sum())
        d_fu = int(fu[inc].sum())
        d_fp = int(fprime[inc].sum())
        if abs(d_u - profile.p_u * deg) > profile.eps_u * deg:
            fail["u_degree"].append(v)
        if in_u[v]:
            d_w = deg - d_u
            if abs(d_fw - profile.p_fw * d_w) > profile.eps_fw * d_w:
                fail["fw_in_u"].append(v)
            lvl = int(part.levels[v])
            if abs(d_fu - (lvl / profile.m_levels) * d_fp) > profile.eps_fu * deg:
                fail["fu_in_u"].append(v)
        else:
            if abs(d_fw - profile.p_fw * d_u) > profile.eps_fw * d_u:
                fail["fw_in_w"].append(v)
            mean_frac = (1.0 - 1.0 / profile.m_levels) / 2.0
            if abs(d_fu - mean_frac * d_fp) > profile.eps_fu * d_fp:
                fail["fu_in_w"].append(v)
    for u in part.u_ids:
        members = n_u_leq(int(u), part, profile)
        if members.size > profile.frac_nu * part.d_u[u]:
            fail["nu_leq"].append(int(u))
    ok = not any(fail.values())
    return AuditReport(ok=ok, failures=fail)
