"""Monte Carlo batches and the observables computed from them.

Per run we keep the first interbank cascade (its size and losses), the
interbank volume originated at a fixed step, DebtRank profiles sampled along
the way, and the marginal systemic effect of every liability at chosen steps.
A batch folds run records, ordered by seed, into histograms and averages, so
the summary does not depend on how runs were spread over worker processes.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .abm.config import ModelConfig
from .abm.model import simulate
from .abm.resolution import CascadeReport
from .abm.state import EconomyState
from .debtrank import economic_values, risk_profile
from .network import LiabilityNetwork
from .systemic_loss import DefaultModel, marginal_liability_effect

DEFAULT_LOG_BINS = 30


def transaction_volume(state: EconomyState, T: int) -> float:
    """Principal of all interbank loans originated at step ``T``."""
    return float(state.ib_volume_by_step.get(T, 0.0))


def volume_from_events(events: Iterable[tuple], T: int) -> float:
    """Same quantity replayed from an event stream."""
    return float(sum(e[5] for e in events if e[0] == "ib_loan" and e[1] == T))


def marginal_scatter(net: LiabilityNetwork, capital, model: DefaultModel,
                     weights: str = "liabilities") -> list[tuple[float, float]]:
    """``(L_mn / V, removal effect)`` for every nonzero liability, row-major.

    Weights and V are those of the full network for every removal.
    """
    L = net.liabilities
    idx = np.argwhere(L > 0)
    if not len(idx):
        return []
    values = economic_values(net, weights)
    base = risk_profile(net, capital, values=values)
    V = values.V_total
    out = []
    for m, n in idx:
        d = marginal_liability_effect(net, capital, model, int(m), int(n), values=values, base=base)
        out.append((float(L[m, n] / V), d))
    return out


@dataclass(frozen=True)
class RunRecord:
    """Observables of one run; immutable once produced."""

    seed: int
    mode: str
    steps_run: int
    cascade: Optional[CascadeReport]
    volume_at_T: Optional[float]  # None when the run ended before T
    risk_samples: tuple = ()  # ((t, (R_0, ..., R_B-1)), ...)
    marginal_samples: tuple = ()  # ((t, ((x, delta), ...)), ...)
    degenerate: bool = False

    @property
    def cascade_size(self) -> int:
        return 0 if self.cascade is None else self.cascade.cascade_size

    @property
    def total_losses(self) -> float:
        return 0.0 if self.cascade is None else self.cascade.total_losses

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "mode": self.mode,
            "steps_run": self.steps_run,
            "degenerate": self.degenerate,
            "cascade": None if self.cascade is None else self.cascade.as_dict(),
            "cascade_size": self.cascade_size,
            "total_losses": self.total_losses,
            "volume_at_T": self.volume_at_T,
            "risk_samples": [[t, list(R)] for t, R in self.risk_samples],
            "marginal_samples": [[t, [list(p) for p in pts]] for t, pts in self.marginal_samples],
        }


def run_one(cfg: ModelConfig, seed: int, events: Optional[list] = None) -> RunRecord:
    """Simulate one seed and extract its observables."""
    model = DefaultModel.uniform(cfg.B, cfg.p_def, discount_rate=cfg.discount_rate,
                                 steps_per_year=cfg.steps_per_year)
    risk: list = []
    marg: list = []
    volume: list = []
    marginal_steps = set(cfg.marginal_steps)

    def observe(state: EconomyState, res) -> None:
        t = state.t
        if t == cfg.volume_step:
            volume.append(transaction_volume(state, t))
        # samples describe the network the step leaves behind, before any cascade
        # on later steps; a cascading step is skipped since positions were closed
        if res.cascade is not None:
            return
        if cfg.sample_every and t % cfg.sample_every == 0:
            prof = risk_profile(state.network(), state.bank_capital, weights=cfg.value_weights)
            risk.append((t, tuple(float(x) for x in prof.R)))
        if t in marginal_steps:
            pts = marginal_scatter(state.network(), state.bank_capital, model, cfg.value_weights)
            marg.append((t, tuple(pts)))

    result = simulate(cfg, seed, observer=observe, events=events)
    cascade = result.cascades[0] if result.cascades else None
    return RunRecord(
        seed=seed,
        mode=cfg.tax_mode,
        steps_run=result.steps_run,
        cascade=cascade,
        volume_at_T=volume[0] if volume else None,
        risk_samples=tuple(risk),
        marginal_samples=tuple(marg),
        degenerate=result.degenerate,
    )


def _run_job(args) -> RunRecord:
    cfg_json, seed = args
    return run_one(ModelConfig.from_json(cfg_json), seed)


# --- histograms ----------------------------------------------------------------

@dataclass(frozen=True)
class Histogram:
    """Counts over ``edges``; values at or below zero are counted in ``zeros``."""

    edges: tuple
    counts: tuple
    zeros: int = 0
    log: bool = False

    @property
    def total(self) -> int:
        return int(sum(self.counts)) + self.zeros

    def as_dict(self) -> dict:
        return {"edges": list(self.edges), "counts": list(self.counts), "zeros": self.zeros,
                "log": self.log, "total": self.total}


def log_edges(values: Sequence[float], bins: int = DEFAULT_LOG_BINS) -> tuple:
    """Log-spaced edges spanning the positive values (one decade if there are none)."""
    pos = [v for v in values if v > 0]
    if not pos:
        return tuple(float(x) for x in np.logspace(0, 1, bins + 1))
    lo, hi = min(pos), max(pos)
    if hi <= lo:
        lo, hi = lo / math.sqrt(10), hi * math.sqrt(10)
    return tuple(float(x) for x in np.logspace(math.log10(lo), math.log10(hi), bins + 1))


def log_histogram(values: Sequence[float], edges: Sequence[float]) -> Histogram:
    vals = np.asarray([v for v in values], dtype=float)
    pos = vals[vals > 0]
    e = np.asarray(edges, dtype=float)
    # clip into the outer bins so every positive value is counted
    counts, _ = np.histogram(np.clip(pos, e[0], e[-1]), bins=e)
    return Histogram(tuple(float(x) for x in e), tuple(int(c) for c in counts),
                     int((vals <= 0).sum()), True)


def integer_histogram(values: Sequence[int], top: int) -> Histogram:
    """Bins for 0, 1, ..., top."""
    counts = np.bincount(np.asarray(values, dtype=int), minlength=top + 1)[: top + 1]
    edges = tuple(float(x) - 0.5 for x in range(top + 2))
    return Histogram(edges, tuple(int(c) for c in counts), 0, False)


# --- batch summary -----------------------------------------------------------

@dataclass(frozen=True)
class BatchSummary:
    """Deterministic aggregate of a batch of run records."""

    mode: str
    n_runs: int
    base_seed: int
    config_hash: str
    n_cascades: int
    n_degenerate: int
    n_volume_missing: int
    losses: Histogram  # every run, cascade-free runs count as zero loss
    losses_conditional: Histogram  # runs with a cascade
    cascade_sizes: Histogram
    cascade_sizes_conditional: Histogram
    volume: Histogram  # runs that reached the volume step
    rank_profile: tuple  # mean DebtRank by rank, most risky first
    scatter: tuple  # ((x, delta), ...) pooled over runs at the marginal steps
    quantiles: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "mode": self.mode,
            "n_runs": self.n_runs,
            "base_seed": self.base_seed,
            "config_hash": self.config_hash,
            "n_cascades": self.n_cascades,
            "n_degenerate": self.n_degenerate,
            "n_volume_missing": self.n_volume_missing,
            "quantiles": self.quantiles,
            "histograms": {
                "losses": self.losses.as_dict(),
                "losses_conditional": self.losses_conditional.as_dict(),
                "cascade_size": self.cascade_sizes.as_dict(),
                "cascade_size_conditional": self.cascade_sizes_conditional.as_dict(),
                "volume": self.volume.as_dict(),
            },
            "rank_profile": list(self.rank_profile),
            "scatter": [list(p) for p in self.scatter],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=1)


def _q(values, q):
    return None if not len(values) else float(np.quantile(np.asarray(values, dtype=float), q))


def summarize(records: Sequence[RunRecord], cfg: ModelConfig, base_seed: int = 0,
              loss_edges: Optional[Sequence[float]] = None,
              volume_edges: Optional[Sequence[float]] = None,
              bins: int = DEFAULT_LOG_BINS) -> BatchSummary:
    """Fold run records into a summary; records are put in seed order first."""
    recs = sorted(records, key=lambda r: r.seed)
    losses = [r.total_losses for r in recs]
    cond_losses = [r.total_losses for r in recs if r.cascade is not None]
    sizes = [r.cascade_size for r in recs]
    cond_sizes = [r.cascade_size for r in recs if r.cascade is not None]
    vols = [r.volume_at_T for r in recs if r.volume_at_T is not None]
    le = tuple(loss_edges) if loss_edges is not None else log_edges(losses, bins)
    ve = tuple(volume_edges) if volume_edges is not None else log_edges(vols, bins)

    profiles = [sorted(R, reverse=True) for r in recs for _, R in r.risk_samples]
    rank_profile = tuple(float(x) for x in np.mean(profiles, axis=0)) if profiles else ()
    scatter = tuple(p for r in recs for _, pts in r.marginal_samples for p in pts)
    abs_delta = [abs(d) for _, d in scatter]

    quantiles = {
        "losses_p95": _q(losses, 0.95),
        "losses_median": _q(losses, 0.5),
        "cascade_size_max": max(sizes) if sizes else 0,
        "volume_median": _q(vols, 0.5),
        "marginal_abs_median": _q(abs_delta, 0.5),
    }
    return BatchSummary(
        mode=cfg.tax_mode,
        n_runs=len(recs),
        base_seed=base_seed,
        config_hash=cfg.config_hash(),
        n_cascades=len(cond_sizes),
        n_degenerate=sum(r.degenerate for r in recs),
        n_volume_missing=len(recs) - len(vols),
        losses=log_histogram(losses, le),
        losses_conditional=log_histogram(cond_losses, le),
        cascade_sizes=integer_histogram(sizes, cfg.B),
        cascade_sizes_conditional=integer_histogram(cond_sizes, cfg.B),
        volume=log_histogram(vols, ve),
        rank_profile=rank_profile,
        scatter=scatter,
        quantiles=quantiles,
        metadata=metadata(cfg, base_seed),
    )


def metadata(cfg: ModelConfig, seed: Optional[int] = None) -> dict:
    return {"version": __version__, "seed": seed, "config_hash": cfg.config_hash(),
            "value_weights": cfg.value_weights}


def run_records(cfg: ModelConfig, n_runs: int, base_seed: int = 0, workers: int = 1) -> list[RunRecord]:
    """Run seeds ``base_seed .. base_seed + n_runs - 1``; returned in seed order."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    seeds = [base_seed + k for k in range(n_runs)]
    if workers <= 1:
        return [run_one(cfg, s) for s in seeds]
    blob = cfg.to_json()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        recs = list(pool.map(_run_job, [(blob, s) for s in seeds], chunksize=max(1, n_runs // (4 * workers))))
    return sorted(recs, key=lambda r: r.seed)


def run_batch(cfg: ModelConfig, n_runs: int, base_seed: int = 0, workers: int = 1) -> BatchSummary:
    """Run a batch and summarize it; the result does not depend on ``workers``."""
    return summarize(run_records(cfg, n_runs, base_seed, workers), cfg, base_seed)
