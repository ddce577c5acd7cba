"""Source discovery: greedy iterative search plus an exhaustive oracle.

The iterative search grows the candidate set one source per step: at step
l it scores theta_selected + {i} for every unselected candidate i with
the requested activity index (full form while l <= rank, reduced-rank
form afterwards) and keeps the maximizer.  Candidates whose kernel cannot
be built are skipped and logged, never fatal.  Ties break to the lowest
candidate index, and the per-step sweep may run on any number of threads
without changing the result.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

from .errors import (
    AllCandidatesDegenerate,
    ComboLimitExceeded,
    DegenerateGap,
    InfeasibleDimensions,
    InvariantViolation,
    QNotPositiveDefinite,
    RankDeficientSubset,
    UsageError,
)
from .indices import INDEX_KINDS, KernelFactory, evaluate
from .model import Covariance, LeadField, SourceSet

THREADS_ENV = "MVPURE_THREADS"

#: Per-candidate failures that are skipped and logged rather than raised.
_SKIPPABLE = (RankDeficientSubset, QNotPositiveDefinite, InvariantViolation)


@dataclass(frozen=True)
class TraceStep:
    step: int
    value: float
    chosen: int | None
    candidates: tuple[tuple[int, float], ...] | None = None


@dataclass(frozen=True)
class SkipEvent:
    step: int
    candidate: int
    reason: str


@dataclass(frozen=True, eq=False)
class LocalizationResult:
    sources: SourceSet
    index_trace: tuple[TraceStep, ...]
    index_kind: str
    rank_used: int
    skipped: tuple[SkipEvent, ...]

    def to_dict(self) -> dict:
        trace = []
        for t in self.index_trace:
            entry = {"step": t.step, "value": t.value, "chosen": t.chosen}
            if t.candidates is not None:
                entry["candidates"] = [[i, v] for i, v in t.candidates]
            trace.append(entry)
        return {
            "sources": list(self.sources),
            "index_trace": trace,
            "rank_used": self.rank_used,
            "index_kind": self.index_kind,
            "skipped": [
                {"step": s.step, "candidate": s.candidate, "reason": s.reason}
                for s in self.skipped
            ],
        }


def _effective_width(parallel_width: int) -> int:
    if parallel_width < 0:
        raise UsageError(f"parallel width must be >= 0, got {parallel_width}")
    width = parallel_width if parallel_width > 0 else (os.cpu_count() or 1)
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            width = min(width, max(1, int(cap)))
        except ValueError as exc:
            raise UsageError(f"{THREADS_ENV}={cap!r} is not an integer") from exc
    return max(1, width)


def _validate_problem(L: LeadField, l0: int, r: int, index_kind: str) -> None:
    if index_kind not in INDEX_KINDS:
        raise UsageError(f"index kind must be one of {INDEX_KINDS}, got {index_kind!r}")
    m, s = L.n_channels, L.n_sources
    if not 1 <= r <= l0 <= min(m - 1, s):
        raise InfeasibleDimensions(
            f"need 1 <= rank <= n_sources <= min(m-1, s) = {min(m - 1, s)}; "
            f"got rank={r}, n_sources={l0}"
        )


def _score_candidate(factory, selected, cand, index_kind, r):
    """Score one candidate; returns (value or None, skip reason or None)."""
    theta = SourceSet(tuple(selected) + (cand,))
    try:
        kernel = factory.build(theta)
    except _SKIPPABLE as exc:
        return None, f"{type(exc).__name__}: {exc}"
    try:
        return evaluate(index_kind, kernel, r), None
    except DegenerateGap:
        if r <= 1:
            return None, "DegenerateGap: rank 1 projector ill-defined"
        try:
            value = evaluate(index_kind, kernel, r - 1)
        except (DegenerateGap, *_SKIPPABLE) as exc:
            return None, f"{type(exc).__name__} after rank-{r - 1} retry: {exc}"
        return value, f"DegenerateGap at rank {r}: scored with rank {r - 1}"
    except _SKIPPABLE as exc:
        return None, f"{type(exc).__name__}: {exc}"


def localize_iterative(
    L: LeadField,
    R: Covariance,
    N: Covariance,
    l0: int,
    r: int,
    index_kind: str = "mpz_mvp",
    parallel_width: int = 0,
    record_candidates: bool = False,
) -> LocalizationResult:
    """Greedy discovery of l0 sources, one per step.

    Deterministic for fixed inputs: candidate scores do not depend on the
    sweep's thread count and the max-reduction breaks ties toward the
    lowest candidate index.  ``parallel_width`` 0 means all available
    cores; the MVPURE_THREADS environment variable caps it either way.
    """
    _validate_problem(L, l0, r, index_kind)
    width = _effective_width(parallel_width)
    factory = KernelFactory(L, R, N)

    selected: list[int] = []
    trace: list[TraceStep] = []
    skipped: list[SkipEvent] = []
    for step in range(1, l0 + 1):
        candidates = [i for i in range(L.n_sources) if i not in selected]
        if width > 1 and len(candidates) > 1:
            with ThreadPoolExecutor(max_workers=width) as pool:
                outcomes = list(
                    pool.map(
                        lambda c: _score_candidate(factory, selected, c, index_kind, r),
                        candidates,
                    )
                )
        else:
            outcomes = [
                _score_candidate(factory, selected, c, index_kind, r)
                for c in candidates
            ]

        best_i, best_v = None, None
        scored: list[tuple[int, float]] = []
        for cand, (value, note) in zip(candidates, outcomes):
            if note is not None:
                skipped.append(SkipEvent(step=step, candidate=cand, reason=note))
            if value is None:
                continue
            scored.append((cand, value))
            if best_v is None or value > best_v:
                best_i, best_v = cand, value
        if best_i is None:
            raise AllCandidatesDegenerate(
                f"step {step}: no candidate admits a well-defined index "
                f"({len(candidates)} tried)"
            )
        selected.append(best_i)
        trace.append(
            TraceStep(
                step=step,
                value=best_v,
                chosen=best_i,
                candidates=tuple(scored) if record_candidates else None,
            )
        )
    return LocalizationResult(
        sources=SourceSet(tuple(selected)),
        index_trace=tuple(trace),
        index_kind=index_kind,
        rank_used=r,
        skipped=tuple(skipped),
    )


def localize_bruteforce(
    L: LeadField,
    R: Covariance,
    N: Covariance,
    l0: int,
    r: int,
    index_kind: str = "mpz_mvp",
    combo_limit: int = 200_000,
) -> LocalizationResult:
    """Exact maximizer over every l0-subset of candidates.

    Intended as a small-instance oracle: refuses to enumerate more than
    ``combo_limit`` subsets.  Ties break to the lexicographically smallest
    subset.
    """
    _validate_problem(L, l0, r, index_kind)
    n_combos = math.comb(L.n_sources, l0)
    if n_combos > combo_limit:
        raise ComboLimitExceeded(
            f"{n_combos} subsets exceed the {combo_limit} evaluation budget"
        )
    factory = KernelFactory(L, R, N)
    best_set, best_v = None, None
    skipped: list[SkipEvent] = []
    for combo in combinations(range(L.n_sources), l0):
        theta = SourceSet(combo)
        try:
            kernel = factory.build(theta)
            value = evaluate(index_kind, kernel, r)
        except (DegenerateGap, *_SKIPPABLE) as exc:
            skipped.append(
                SkipEvent(step=l0, candidate=combo[0], reason=f"{combo}: {type(exc).__name__}")
            )
            continue
        if best_v is None or value > best_v:
            best_set, best_v = combo, value
    if best_set is None:
        raise AllCandidatesDegenerate("no subset admits a well-defined index")
    return LocalizationResult(
        sources=SourceSet(best_set),
        index_trace=(TraceStep(step=l0, value=best_v, chosen=None),),
        index_kind=index_kind,
        rank_used=r,
        skipped=tuple(skipped),
    )
