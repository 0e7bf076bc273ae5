"""End-to-end construction: partition, periphery weighting, core adjustment.

A run either returns a fully verified weighting with weights in {1, 2, 3}
and no adjacent equal sums, or a structured stage failure; it never
returns an unverified success. Outcomes are deterministic functions of
(graph, profile, seed, budgets).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateLength,
    InfeasibleProfile,
    InsufficientFW,
    NoValidAddition,
    NoValidPair,
    RetryExhausted,
)
from .graph import Graph
from .partition import SampleStats, audit_partition, sample_partition
from .profiles import ProfileConstants, check_degree_regime, check_partition_feasible
from .rng import TAG_RESTART, derive_seed
from .ustage import build_estar, estar_bounds_hold, final_verify, finalize_u
from .weighting import EdgeWeighting
from .wstage import apply_additions, choose_sum_additions, resample_w_stage


@dataclass(frozen=True)
class Budgets:
    partition_rounds: int = 80
    partition_retries: int = 2
    wstage_rounds: int = 150
    wstage_reruns: int = 1
    pipeline_restarts: int = 1


@dataclass
class PipelineOutcome:
    status: str                      # "success" | "failure"
    stage: str | None                # failing stage when status == "failure"
    reason: str | None
    seed: int
    weighting: EdgeWeighting | None
    s3: np.ndarray | None
    stats: dict = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return self.status == "success"

    def fingerprint(self) -> str:
        """Deterministic serialization (timings stripped) for seed-identity."""
        body = {
            "status": self.status,
            "stage": self.stage,
            "reason": self.reason,
            "seed": self.seed,
            "weights": self.weighting.weights.tolist() if self.weighting else None,
            "stats": {
                k: v for k, v in self.stats.items() if k not in ("wall_ms",)
            },
        }
        return json.dumps(body, sort_keys=True)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "stage": self.stage,
            "reason": self.reason,
            "seed": self.seed,
            "stats": self.stats,
        }


def _precheck(g: Graph, profile: ProfileConstants) -> None:
    deg = g.degrees
    for u, v in g.edges:
        if deg[u] == 1 and deg[v] == 1:
            raise InfeasibleProfile(f"graph has an isolated edge ({u}, {v})")
    check_degree_regime(g, profile)
    check_partition_feasible(g, profile)


def run(
    g: Graph,
    profile: ProfileConstants,
    seed: int,
    budgets: Budgets | None = None,
) -> PipelineOutcome:
    """Run the full construction; restart once on a stage failure."""
    budgets = budgets or Budgets()
    t0 = time.perf_counter()
    stats: dict = {
        "resamples_partition": 0,
        "resamples_wstage": 0,
        "restarts": 0,
        "rounds": {},
        "audits": {},
    }

    try:
        _precheck(g, profile)
    except InfeasibleProfile as exc:
        stats["wall_ms"] = (time.perf_counter() - t0) * 1000.0
        return PipelineOutcome(
            status="failure", stage="precheck", reason=str(exc),
            seed=seed, weighting=None, s3=None, stats=stats,
        )

    last_failure: tuple[str, str] | None = None
    for attempt in range(budgets.pipeline_restarts + 1):
        stats["restarts"] = attempt
        attempt_seed = seed if attempt == 0 else derive_seed(seed, TAG_RESTART, attempt)
        try:
            outcome = _run_once(g, profile, attempt_seed, budgets, stats)
            outcome.seed = seed
            stats["wall_ms"] = (time.perf_counter() - t0) * 1000.0
            return outcome
        except RetryExhausted as exc:
            stage = "partition" if exc.stage.startswith("partition") else "wstage"
            last_failure = (stage, str(exc))
        except (DegenerateLength, NoValidAddition, InsufficientFW) as exc:
            last_failure = ("wstage", str(exc))
        except NoValidPair as exc:
            last_failure = ("ustage", str(exc))
        except InfeasibleProfile as exc:
            last_failure = ("precheck", str(exc))
            break
    stage, reason = last_failure
    stats["wall_ms"] = (time.perf_counter() - t0) * 1000.0
    return PipelineOutcome(
        status="failure", stage=stage, reason=reason,
        seed=seed, weighting=None, s3=None, stats=stats,
    )


def _run_once(
    g: Graph, profile: ProfileConstants, seed: int, budgets: Budgets,
    stats: dict,
) -> PipelineOutcome:
    part_stats = SampleStats()
    part = sample_partition(
        g, profile, seed,
        stage_rounds=budgets.partition_rounds,
        global_retries=budgets.partition_retries,
        stats=part_stats,
    )
    stats["resamples_partition"] += part_stats.resampled
    stats["rounds"]["partition"] = part_stats.rounds
    stats["audits"]["partition"] = audit_partition(part, profile).ok
    stats["partition_shape"] = part.describe()

    # Periphery stage, with one fresh-stream rerun if the addition step
    # cannot place some vertex.
    state = None
    additions = None
    for rerun in range(budgets.wstage_reruns + 1):
        state = resample_w_stage(
            part, profile, seed, rounds=budgets.wstage_rounds, rerun=rerun,
        )
        stats["resamples_wstage"] += state.resampled
        stats["rounds"]["wstage"] = state.rounds
        try:
            additions = choose_sum_additions(part, state.s1, state.intervals, profile)
            break
        except NoValidAddition:
            if rerun == budgets.wstage_reruns:
                raise
    omega2, s2 = apply_additions(part, state.omega1, additions)

    estar = build_estar(part)
    stats["audits"]["estar_bounds"] = estar_bounds_hold(part, estar)
    result = finalize_u(part, omega2, estar, profile)

    report = final_verify(
        part, result.omega3, profile, expected_periphery_sums=s2,
    )
    stats["audits"]["final_verify"] = report.ok
    stats["verify"] = report.to_dict()
    if not report.ok:
        # Construction bug rather than bad luck; surface as a verify failure.
        return PipelineOutcome(
            status="failure", stage="verify", reason=report.summary(),
            seed=seed, weighting=None, s3=None, stats=stats,
        )
    return PipelineOutcome(
        status="success", stage=None, reason=None, seed=seed,
        weighting=result.omega3, s3=result.s3, stats=stats,
    )
