"""Monte-Carlo campaign harness.

Runs the competing design procedures over seeded UE drops and emits one
CSV row per (trial, sweep value, algorithm). Determinism contract: trial
t always uses the generator seeded with seed XOR t, and every trial draws
in a fixed order (all UE radii, all UE angles, then the sparsity level if
the algorithm needs one), so UE positions agree across algorithms and
sweep values and reruns are byte-identical apart from wall times.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .arrays import feasible_sparsities
from .closed_form import (case2_cscc, make_mode, reference_passive,
                          select_two_ue_eta, single_ue_solution, two_ue_analysis,
                          two_ue_sinr)
from .scenario import Scenario, scenario_geometry
from .wmmse import solve_fixed_eta, wa_solve

ALGORITHMS = ("WA_OPT_ETA", "EXHAUSTIVE_ETA", "COMPACT_ETA1", "RANDOM_ETA",
              "SINGLE_UE_CLOSED", "TWO_UE_PROP1")

CSV_FIELDS = ("trial", "sweep_value", "algorithm", "eta", "sum_rate_bits",
              "min_ue_rate", "iters", "wall_ms", "status")


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def watt_to_dbm(watt: float) -> float:
    if watt <= 0.0:
        raise ValueError(f"power must be positive, got {watt}")
    return 10.0 * math.log10(watt * 1000.0)


def drop_ues(center, radius: float, n_ues: int,
             rng: np.random.Generator) -> np.ndarray:
    """Drop UEs uniformly over a horizontal disk around ``center``.

    Radii come out of the generator first, then angles, so downstream
    draws stay aligned no matter how the positions are consumed.
    """
    if radius < 0.0:
        raise ValueError(f"drop radius must be nonnegative, got {radius}")
    if n_ues < 1:
        raise ValueError(f"need at least one UE, got {n_ues}")
    center = np.asarray(center, dtype=float)
    radii = radius * np.sqrt(rng.random(n_ues))
    angles = 2.0 * math.pi * rng.random(n_ues)
    pos = np.tile(center, (n_ues, 1))
    pos[:, 0] += radii * np.cos(angles)
    pos[:, 1] += radii * np.sin(angles)
    return pos


@dataclass(frozen=True)
class Campaign:
    """A batch of seeded trials over a set of algorithms and, optionally,
    a sweep of total transmit powers (in dBm)."""

    scenario: Scenario
    algorithms: tuple[str, ...]
    n_trials: int
    seed: int
    sweep_dbm: tuple[float, ...] = ()

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError(f"n_trials must be positive, got {self.n_trials}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ValueError(f"unknown algorithms {unknown}; "
                             f"choose from {ALGORITHMS}")
        for v in self.sweep_dbm:
            if not math.isfinite(v):
                raise ValueError(f"sweep value {v} is not finite")

    def sweep_points(self) -> tuple[float, ...]:
        if self.sweep_dbm:
            return self.sweep_dbm
        return (watt_to_dbm(self.scenario.config.total_power),)


@dataclass(frozen=True)
class TrialRow:
    trial: int
    sweep_value: float
    algorithm: str
    eta: int
    sum_rate_bits: float
    min_ue_rate: float
    iters: int
    wall_ms: float
    status: str


def run_trial(campaign: Campaign, trial: int, algorithm: str,
              sweep_dbm: float) -> TrialRow:
    """One seeded trial of one algorithm at one transmit power.

    Failures are captured as a row with status ``failed:<ExceptionName>``
    and NaN rates rather than aborting the campaign.
    """
    scenario = campaign.scenario
    config = replace(scenario.config, total_power=dbm_to_watt(sweep_dbm))
    rng = np.random.default_rng(campaign.seed ^ trial)
    t0 = time.perf_counter()
    try:
        geometry = scenario_geometry(replace(scenario, config=config), rng)
        if algorithm in ("WA_OPT_ETA", "EXHAUSTIVE_ETA"):
            _, mode, report = wa_solve(geometry, config)
            eta, srate = mode.eta, report.sum_rate
            min_rate, iters = float(np.min(report.rate)), report.iterations
        elif algorithm == "COMPACT_ETA1":
            _, mode, report = solve_fixed_eta(geometry, config, 1)
            eta, srate = mode.eta, report.sum_rate
            min_rate, iters = float(np.min(report.rate)), report.iterations
        elif algorithm == "RANDOM_ETA":
            fset = feasible_sparsities(config.n_elems, config.n_connected)
            pick = fset[int(rng.integers(len(fset)))]
            _, mode, report = solve_fixed_eta(geometry, config, pick)
            eta, srate = mode.eta, report.sum_rate
            min_rate, iters = float(np.min(report.rate)), report.iterations
        elif algorithm == "SINGLE_UE_CLOSED":
            mode = make_mode(config.n_elems, config.n_connected, 1)
            sol = single_ue_solution(geometry, config, mode)
            eta, iters = mode.eta, 0
            srate = math.log2(1.0 + sol.snr_max)
            min_rate = srate
        elif algorithm == "TWO_UE_PROP1":
            eta, _ = select_two_ue_eta(geometry, config)
            mode = make_mode(config.n_elems, config.n_connected, eta)
            u_ref = 0.5 * float(geometry.u_ru_aod.sum())
            passive = reference_passive(config.n_elems, config.spacing,
                                        config.wavelength, u_ref,
                                        geometry.u_br_aoa)
            analysis = two_ue_analysis(geometry, config, mode, passive)
            p = np.full(2, config.total_power / 2.0)
            gammas = two_ue_sinr("MMSE", p, analysis.beta, analysis.eps,
                                 config.noise_power)
            rates = np.log2(1.0 + gammas)
            srate, min_rate, iters = float(rates.sum()), float(rates.min()), 0
        else:
            raise ValueError(f"unknown algorithm {algorithm!r}")
        status = "ok"
    except Exception as exc:
        eta, srate, min_rate, iters = 0, math.nan, math.nan, 0
        status = f"failed:{type(exc).__name__}"
    wall_ms = (time.perf_counter() - t0) * 1e3
    return TrialRow(trial=trial, sweep_value=sweep_dbm, algorithm=algorithm,
                    eta=eta, sum_rate_bits=srate, min_ue_rate=min_rate,
                    iters=iters, wall_ms=wall_ms, status=status)


def _run_task(args) -> TrialRow:
    return run_trial(*args)


def run_campaign(campaign: Campaign, jobs: int = 1) -> list[TrialRow]:
    """Run every (sweep value, algorithm, trial) combination; with jobs
    greater than one the trials run in worker processes. The row set is
    identical either way."""
    tasks = [(campaign, trial, alg, sweep)
             for sweep in campaign.sweep_points()
             for alg in campaign.algorithms
             for trial in range(campaign.n_trials)]
    if jobs <= 1:
        return [_run_task(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_task, tasks))


def emit_csv(rows, stream) -> None:
    """Write rows sorted by (sweep value, algorithm, trial); floats are
    rendered with nine significant digits."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for row in sorted(rows, key=lambda r: (r.sweep_value, r.algorithm, r.trial)):
        writer.writerow([
            row.trial,
            format(row.sweep_value, ".9g"),
            row.algorithm,
            row.eta,
            format(row.sum_rate_bits, ".9g"),
            format(row.min_ue_rate, ".9g"),
            row.iters,
            format(row.wall_ms, ".9g"),
            row.status,
        ])


def analyze_two_ue(geometry, config) -> list[dict]:
    """Per-sparsity-level two-UE table: exact and midpoint-form squared
    correlations (equal by construction when the surface is steered at
    the UE midpoint) and the resulting closed-form sum rate."""
    if geometry.n_ues != 2:
        raise ValueError(f"needs K=2, got K={geometry.n_ues}")
    u_ref = 0.5 * float(geometry.u_ru_aod.sum())
    passive = reference_passive(config.n_elems, config.spacing,
                                config.wavelength, u_ref, geometry.u_br_aoa)
    out = []
    for eta in feasible_sparsities(config.n_elems, config.n_connected):
        mode = make_mode(config.n_elems, config.n_connected, eta)
        analysis = two_ue_analysis(geometry, config, mode, passive)
        p = np.full(2, config.total_power / 2.0)
        gammas = two_ue_sinr("MMSE", p, analysis.beta, analysis.eps,
                             config.noise_power)
        out.append({
            "eta": eta,
            "eps": analysis.eps,
            "eps_bar": case2_cscc(geometry, config, eta),
            "sum_rate_bits": float(np.sum(np.log2(1.0 + gammas))),
        })
    return out
