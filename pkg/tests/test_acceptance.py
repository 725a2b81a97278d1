"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly as
``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import sys
import time
from contextlib import redirect_stdout
from fractions import Fraction
from itertools import chain
from pathlib import Path

import mpmath
import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES, small_graphs  # noqa: E402
from oracles import brute_force_schedule  # noqa: E402

from coreplan.cli import main  # noqa: E402
from coreplan.errors import InfeasibleError, ResourceError  # noqa: E402
from coreplan.executor import run_ideal, run_real, simulate  # noqa: E402
from coreplan.graph import from_edges, random_graph, write_edge_list  # noqa: E402
from coreplan.planner import (  # noqa: E402
    PlanConfig, allocate, hoeffding_baseline, lemma1_bound, plan_ideal, sample_size, slot_width,
)
from coreplan.ppr import (  # noqa: E402
    PprParams, complete_params, derive_params, fora_query, forward_push, power_iteration_ppr,
)
from coreplan.workload import (  # noqa: E402
    SyntheticEngine, SyntheticWorkload, generate_queries, time_query,
)
from coreplan.rng import derive_seed  # noqa: E402

ALPHA = 0.2


def verdict(number: int, ok: bool, detail: str, started: float) -> None:
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}  ({time.perf_counter() - started:.2f}s)"
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)
    assert ok, line


def test_criterion_01_sample_size():
    t0 = time.perf_counter()
    got = sample_size(2.576, 0.50, 0.05)
    verdict(1, got == 664, f"sample_size(2.576, 0.5, 0.05) = {got}", t0)


def test_criterion_02_formulas_vs_arbitrary_precision():
    t0 = time.perf_counter()
    mpmath.mp.dps = 60
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        x = int(rng.integers(1, 10**7))
        t_max = float(rng.uniform(1e-4, 50))
        deadline = t_max * float(rng.uniform(1.001, 1e4))
        t_bar = t_max * float(rng.uniform(0.01, 1))
        t_hat = t_max * float(rng.uniform(1, 4))
        k = int(rng.integers(1, 5000))
        p_f = float(rng.uniform(1e-9, 0.999))
        mx, mT, mt = mpmath.mpf(x), mpmath.mpf(deadline), mpmath.mpf(t_max)
        ref1 = mx * mt / mT
        ref2 = (mx / mT) * (mpmath.mpf(t_bar) + mpmath.sqrt(
            mpmath.mpf(t_hat) ** 2 * mpmath.log(2 / mpmath.mpf(p_f)) / (2 * k)))
        for got, ref in ((lemma1_bound(x, deadline, t_max), ref1),
                         (hoeffding_baseline(x, deadline, t_bar, t_hat, k, p_f), ref2)):
            worst = max(worst, float(abs((mpmath.mpf(got) - ref) / ref)))
    verdict(2, worst <= 1e-12, f"max relative error {worst:.3e} over 1000 inputs", t0)


def test_criterion_03_planner_brute_force():
    t0 = time.perf_counter()
    violations = 0
    triples = 0
    for x in range(2, 501):
        # rows are s = 1..x-1, columns ell = 1..x; ell beyond x-s+1 is masked out
        s = np.arange(1, x)[:, None]
        ell = np.arange(1, x + 1)[None, :]
        rest = x - s
        live = ell <= rest + 1
        k = slot_width(x, s, ell)
        violations += int(np.count_nonzero(live & ~(((k - 1) * ell < rest) & (rest <= k * ell))))
        triples += int(live.sum())
    # allocate depends on (x - s, ell) only up to the index offset; cover every such pair
    rng = np.random.default_rng(3)
    bad_alloc = 0
    pairs = 0
    for rest in range(1, 500):
        s = int(rng.integers(1, 501 - rest))
        queries = range(s, s + rest)
        expected = list(queries)
        for ell in range(1, rest + 1):
            k = slot_width(s + rest, s, ell)
            blocks = allocate(queries, ell, k)
            if (len(blocks) != ell or list(chain.from_iterable(blocks)) != expected
                    or max(map(len, blocks)) > k):
                bad_alloc += 1
            pairs += 1
    ok = violations == 0 and bad_alloc == 0
    verdict(3, ok, f"{triples} (X,s,ell) triples: {violations} ceil violations; "
                   f"{pairs} allocations: {bad_alloc} bad partitions", t0)


def test_criterion_04_virtual_schedule_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    mismatches = 0
    for _ in range(500):
        x = int(rng.integers(2, 21))
        s = int(rng.integers(1, x))
        ell = int(rng.integers(1, x - s + 1))
        plan = plan_ideal(x, float(ell + 1) + float(rng.uniform(0, 0.99)), s, 1.0)
        if rng.random() < 0.5:
            durations = [float(v) for v in rng.uniform(0.1, 3.0, x)]
        else:
            durations = [float(v) for v in rng.integers(1, 4, x)]
        c = int(rng.integers(1, 5))
        report = simulate(plan, durations, c)
        _, pre_span, _ = brute_force_schedule(durations[:s], c)
        expected_total = [Fraction(0)] * plan.k
        ok = report.preprocessing_elapsed == float(pre_span)
        for slot, queries in zip(report.per_slot, [q for q in plan.assignment if q]):
            totals, span, _ = brute_force_schedule([durations[q] for q in queries], plan.k)
            ok &= slot["worker_totals"] == [float(t) for t in totals] and slot["duration"] == float(span)
            for j, t in enumerate(totals):
                expected_total[j] += t
        width = len(report.worker_totals)
        ok &= report.worker_totals == [float(t) for t in expected_total[:width]]
        mismatches += not ok
    verdict(4, mismatches == 0, f"500 random plans: {mismatches} mismatches", t0)


def test_criterion_05_ideal_feasibility_grid():
    t0 = time.perf_counter()
    runs = violations = skipped = 0
    for x in (50, 333, 1000, 4099, 10_000):
        for t in (0.1, 0.7, 1.0, 3.3):
            for factor in (1.5, 2.0, 7.3, 40.0, 401.0):
                deadline = t * factor
                engine = SyntheticEngine(SyntheticWorkload.parse(f"constant:{t}"), x, 0)
                for s in sorted({1, max(1, x // 100), max(1, x // 10)}):
                    config = PlanConfig(x, deadline, max_retries=0)
                    try:
                        _, report = run_ideal(config, engine, virtual=True, sample=s)
                    except InfeasibleError:
                        skipped += 1
                        continue
                    runs += 1
                    violations += not (report.feasible and report.total_elapsed <= deadline)
    verdict(5, violations == 0,
            f"{runs} planned runs: {violations} violations ({skipped} grid points unplannable)", t0)


def test_criterion_06_real_worked_example():
    t0 = time.perf_counter()
    engine = SyntheticEngine(SyntheticWorkload.parse("constant:2"), 110, 0)
    plan, report, _ = run_real(PlanConfig(110, 50, c=1, d=1.0), engine, virtual=True, sample=10)
    ok = (plan.k, plan.ell, report.total_elapsed, report.feasible) == (7, 15, 50.0, True)
    try:
        run_real(PlanConfig(110, 50, c_max=4), engine, virtual=True, sample=10)
        gate = "no error"
    except ResourceError as exc:
        gate = f"{exc.available} < {exc.required}"
    ok &= gate == "4 < 5"
    verdict(6, ok, f"k={plan.k} ell={plan.ell} completion={report.total_elapsed}; gate {gate}", t0)


def test_criterion_07_power_iteration_oracle():
    t0 = time.perf_counter()
    pi00 = power_iteration_ppr(from_edges([0, 1], [1, 0]), 0, ALPHA)[0]
    cycle_ok = abs(pi00 - 0.555556) <= 1e-6
    worst = 0.0
    for g in small_graphs(100, seed=7):
        worst = max(worst, abs(power_iteration_ppr(g, 0, ALPHA).sum() - 1))
    verdict(7, cycle_ok and worst <= 1e-9,
            f"pi(0,0)={pi00:.7f}; max |sum-1| = {worst:.1e} on 100 graphs", t0)


def test_criterion_08_forward_push_invariants():
    t0 = time.perf_counter()
    mass_err = decomp_err = 0.0
    bound_bad = 0
    for i, g in enumerate(small_graphs(100, seed=8)):
        r_max = (1e-2, 1e-3, 1e-4)[i % 3]
        full = forward_push(g, 0, ALPHA, r_max)
        for j in sorted({0, 1, full.pushes // 3, full.pushes // 2, full.pushes}):
            part = forward_push(g, 0, ALPHA, r_max, max_pushes=j)
            mass_err = max(mass_err, abs(part.reserve.sum() + part.residue.sum() - 1))
        deg = g.degrees
        live = deg > 0
        bound_bad += int(np.count_nonzero(full.residue[live] > r_max * deg[live]))
        bound_bad += int(np.count_nonzero(full.residue[~live] > 0))
        oracle = np.array([power_iteration_ppr(g, v, ALPHA) for v in range(g.n)])
        decomp_err = max(decomp_err, float(np.abs(oracle[0] - (full.reserve + full.residue @ oracle)).max()))
    ok = mass_err <= 1e-12 and bound_bad == 0 and decomp_err <= 1e-6
    verdict(8, ok, f"mass err {mass_err:.1e}; {bound_bad} residue bound violations; "
                   f"decomposition err {decomp_err:.1e}", t0)


def test_criterion_09_fora_guarantee():
    t0 = time.perf_counter()
    g = random_graph(50, 3.0, seed=9, dead_end_fraction=0.1)
    params = complete_params(g, PprParams(alpha=ALPHA, epsilon=0.5, delta=0.02, p_f=0.05))
    truth = power_iteration_ppr(g, 0, ALPHA)
    big = truth >= params.delta
    failures = 0
    for seed in range(200):
        est = fora_query(g, 0, params, seed).dense(g.n)
        failures += bool((np.abs(est[big] - truth[big]) > params.epsilon * truth[big]).any())
    verdict(9, failures <= 20, f"{failures}/200 runs violate the relative error bound "
                               f"({int(big.sum())} targets, omega={params.omega})", t0)


@pytest.mark.slow
def test_criterion_10_scaled_baseline(tmp_path):
    t0 = time.perf_counter()
    g = random_graph(10_000, 5.0, seed=10, dead_end_fraction=0.05)
    path = tmp_path / "synthetic10k.txt"
    write_edge_list(g, path)
    params = derive_params(g)
    probe = generate_queries(g, 20, derive_seed(0, "calibration"))
    mean = float(np.mean([time_query(g, int(v), params, 1) for v in probe.sources]))
    deadline = 50 * mean
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(["baseline", "--graph", str(path), "--queries", "200,400,600", "--d", "1.0,0.85",
                     "--deadline", repr(deadline), "--sample-policy", "fraction=0.05",
                     "--t-hat-factor", "2", "--seed", "0", "--out", str(tmp_path)])
    rows = list(csv.DictReader(io.StringIO(buf.getvalue())))
    planned = [r for r in rows if r["k_danda"]]
    below = all(int(r["k_danda"]) <= math.ceil(float(r["hoeffding"])) for r in planned)
    by_x = {}
    for r in planned:
        by_x.setdefault(r["X"], {})[r["d"]] = int(r["k_danda"])
    sweep = all(v.get("0.85", 0) >= v.get("1.0", 0) for v in by_x.values())
    ok = code == 0 and len(planned) == 6 and below and sweep
    summary = "; ".join(f"X={r['X']} d={r['d']} k={r['k_danda']} hb={r['k_baseline']}" for r in planned)
    verdict(10, ok, f"deadline {deadline:.3f}s: {summary}", t0)


def test_criterion_11_determinism(tmp_path):
    t0 = time.perf_counter()
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({
        "dataset": "determinism", "synthetic": "lognormal:0.0,0.5,6.0", "queries": [2000],
        "deadline": 200.0, "sample_policy": "fraction=0.02", "seed": 11, "virtual": True,
    }))
    texts = []
    for run in ("a", "b"):
        out = tmp_path / run
        with redirect_stdout(io.StringIO()):
            code = main(["run", "--manifest", str(manifest), "--out", str(out)])
        texts.append((code, (out / "report.json").read_bytes()))
    ok = texts[0] == texts[1]
    verdict(11, ok, f"report.json {len(texts[0][1])} bytes, identical={texts[0][1] == texts[1][1]}, "
                    f"exit codes {texts[0][0]}/{texts[1][0]}", t0)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
