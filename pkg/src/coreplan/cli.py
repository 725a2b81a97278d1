"""Command-line front end.

Machine-readable output (JSON, CSV) goes to stdout and the output directory;
human summaries go to stderr. Exit codes: 0 success, 1 usage or validation,
2 infeasible deadline, 3 resource gate, 4 deadline missed at execution.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import CoreplanError, InfeasibleError, ResourceError, ValidationError, ParseError
from .executor import execute_plan, run_ideal, run_real
from .graph import load_edge_list
from .planner import Plan, PlanConfig, plan_ideal, plan_real, z_for_confidence, hoeffding_from_stats
from .ppr import derive_params, fora_query, power_iteration_ppr
from .rng import derive_seed
from .workload import (
    ForaEngine, SyntheticEngine, SyntheticWorkload, TimingStats,
    generate_queries, preprocess, read_queries,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_RESOURCE = 3
EXIT_MISSED = 4


@dataclass
class RunManifest:
    """Everything that determines a run; virtual-mode runs are reproducible from it."""

    dataset: str | None = None
    graph: str | None = None
    directed: bool = True
    synthetic: str | None = None
    queries: list = field(default_factory=list)
    query_file: str | None = None
    deadline: float | None = None
    cmax: int | None = None
    d: list = field(default_factory=lambda: [1.0])
    c: int = 1
    z: float | None = None
    confidence: int = 99
    p: float = 0.5
    e: float = 0.05
    sample_policy: str = "cochran"
    alpha: float = 0.2
    epsilon: float = 0.5
    delta: float | None = None
    pf: float | None = None
    r_max: float | None = None
    omega: int | None = None
    t_hat: float | None = None
    t_hat_factor: float = 2.0
    seed: int = 0
    virtual: bool = False
    ideal: bool = False
    max_retries: int = 3
    threads: int | None = None
    out: str | None = None

    @classmethod
    def load(cls, path) -> "RunManifest":
        data = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParseError(f"unknown manifest fields: {sorted(unknown)}")
        return cls(**data)

    def record(self) -> dict:
        """Manifest as embedded in outputs; the output directory is left out."""
        out = asdict(self)
        out.pop("out")
        return out

    @property
    def name(self) -> str:
        if self.dataset:
            return self.dataset
        if self.graph:
            return Path(self.graph).stem
        return self.synthetic or "unnamed"

    @property
    def z_score(self) -> float:
        return self.z if self.z is not None else z_for_confidence(self.confidence)

    @property
    def sample_fraction(self) -> float | None:
        if self.sample_policy == "cochran":
            return None
        key, _, value = self.sample_policy.partition("=")
        if key != "fraction" or not value:
            raise ValidationError(f"sample policy must be 'cochran' or 'fraction=F', got {self.sample_policy!r}")
        return float(value)


class Context:
    """Graph, PPR parameters and engines resolved from a manifest."""

    def __init__(self, manifest: RunManifest):
        self.manifest = manifest
        if bool(manifest.graph) == bool(manifest.synthetic):
            raise ValidationError("give exactly one of --graph and --synthetic")
        self.graph = None
        self.params = None
        self.workload = None
        if manifest.graph:
            self.graph = load_edge_list(manifest.graph, directed=manifest.directed)
            self.params = derive_params(
                self.graph, alpha=manifest.alpha, epsilon=manifest.epsilon, delta=manifest.delta,
                p_f=manifest.pf, r_max=manifest.r_max, omega=manifest.omega,
            )
            self.p_f = self.params.p_f
        else:
            self.workload = SyntheticWorkload.parse(manifest.synthetic)
            self.p_f = manifest.pf if manifest.pf is not None else 0.01
        self.query_file = read_queries(manifest.query_file, self.graph) if manifest.query_file else None

    def totals(self) -> list[int]:
        if self.manifest.queries:
            return [int(x) for x in self.manifest.queries]
        if self.query_file is not None:
            return [len(self.query_file)]
        raise ValidationError("give --queries or --query-file")

    def engine(self, x: int):
        m = self.manifest
        if self.workload is not None:
            return SyntheticEngine(self.workload, x, derive_seed(m.seed, "synthetic"))
        if self.query_file is not None:
            if x > len(self.query_file):
                raise ValidationError(f"query file has {len(self.query_file)} queries, {x} requested")
            queries = self.query_file.prefix(x)
        else:
            queries = generate_queries(self.graph, x, m.seed)
        return ForaEngine(self.graph, queries, self.params, derive_seed(m.seed, "walks"))

    def config(self, x: int, d: float | None = None) -> PlanConfig:
        m = self.manifest
        if m.deadline is None:
            raise ValidationError("--deadline is required")
        return PlanConfig(
            total_queries=x, deadline=m.deadline, c_max=m.cmax, d=m.d[0] if d is None else d,
            c=m.c, z=m.z_score, p=m.p, e=m.e, sample_fraction=m.sample_fraction, p_f=self.p_f,
            t_hat=m.t_hat, t_hat_factor=m.t_hat_factor, max_retries=m.max_retries,
        )

    def sample(self, config: PlanConfig) -> int:
        return config.sample_count(min(self.totals()))


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _write(manifest: RunManifest, name: str, text: str) -> None:
    if manifest.out:
        out = Path(manifest.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)


def _say(*lines) -> None:
    for line in lines:
        print(line, file=sys.stderr)


def _fmt(x) -> str:
    return "-" if x is None else (f"{x:.6g}" if isinstance(x, float) else str(x))


def _summary(plan: Plan, stats: TimingStats | None) -> None:
    _say(
        f"mode={plan.mode} X={plan.total_queries} T={_fmt(plan.deadline)}",
        f"s={plan.s} t_max={_fmt(plan.t_max)} t_pre={_fmt(plan.t_pre if stats is None else stats.t_pre)} "
        f"t_avg={_fmt(plan.t_avg if stats is None else stats.t_avg)}",
        f"ell={plan.ell} k={plan.k} cores_required={plan.cores_required}",
        f"lemma1={_fmt(plan.bounds.get('lemma1'))} hoeffding={_fmt(plan.bounds.get('hoeffding'))}",
    )


def _preprocess(ctx: Context, config: PlanConfig, engine, s: int, ideal: bool) -> TimingStats:
    m = ctx.manifest
    c = s if ideal and m.virtual else config.c
    return preprocess(engine, s, c, virtual=m.virtual, t_hat=config.t_hat,
                      t_hat_factor=config.t_hat_factor)


def cmd_plan(m: RunManifest) -> int:
    ctx = Context(m)
    x = ctx.totals()[0]
    config = ctx.config(x)
    s = ctx.sample(config)
    engine = ctx.engine(x)
    stats = _preprocess(ctx, config, engine, s, m.ideal)
    if m.ideal:
        plan = plan_ideal(x, config.deadline, s, stats.t_max)
        plan.bounds["hoeffding"] = hoeffding_from_stats(x, config.deadline, stats, config.p_f)
    else:
        plan = plan_real(config, stats)
    doc = {"dataset": m.name, "manifest": m.record(), "plan": plan.to_dict(), "stats": stats.to_dict()}
    text = _dump(doc)
    _write(m, "plan.json", text)
    sys.stdout.write(text)
    _summary(plan, stats)
    return EXIT_OK


def _report_doc(m: RunManifest, plan: Plan, report) -> dict:
    return {"dataset": m.name, "manifest": m.record(), "plan": plan.to_dict(), "report": report.to_dict()}


def cmd_run(m: RunManifest, plan_path: str | None = None) -> int:
    if plan_path:
        saved = json.loads(Path(plan_path).read_text())
        m = RunManifest(**{**saved["manifest"], "out": m.out, "virtual": m.virtual})
    ctx = Context(m)
    x = ctx.totals()[0]
    config = ctx.config(x)
    engine = ctx.engine(x)
    if plan_path:
        plan = Plan.from_dict(saved["plan"])
        c = plan.s if plan.mode == "ideal" else config.c
        report = execute_plan(plan, engine, c, virtual=m.virtual, max_workers=m.threads)
    elif m.ideal:
        plan, report = run_ideal(config, engine, virtual=m.virtual, max_workers=m.threads,
                                 sample=ctx.sample(config))
    else:
        plan, report, _ = run_real(config, engine, virtual=m.virtual, max_workers=m.threads,
                                   sample=ctx.sample(config))
    text = _dump(_report_doc(m, plan, report))
    _write(m, "report.json", text)
    _write(m, "trace.csv", report.trace_csv())
    sys.stdout.write(text)
    _summary(plan, None)
    _say(f"T_max={_fmt(report.T_max)} check={_fmt(report.check_value)} <= T={_fmt(report.deadline)}: "
         f"{'feasible' if report.feasible else 'DEADLINE MISSED'} (attempts={report.attempts})")
    return EXIT_OK if report.feasible else EXIT_MISSED


def reduction_pct(k: int, baseline: int) -> float:
    return 100.0 * (baseline - k) / baseline


BASELINE_COLUMNS = [
    "dataset", "X", "d", "s", "ell", "k_danda", "k_baseline", "hoeffding", "lemma1",
    "reduction_pct", "processing_time", "feasible", "status",
]


def cmd_baseline(m: RunManifest) -> int:
    """One row per (X, d): D&A_Real cores against the ceiled Hoeffding bound.

    For each X the sample is timed once and every d is planned from the same
    timings, so the d comparison is paired.
    """
    ctx = Context(m)
    rows = []
    for x in ctx.totals():
        config = ctx.config(x)
        s = ctx.sample(config)
        engine = ctx.engine(x)
        stats = _preprocess(ctx, config, engine, s, ideal=False)
        for d in m.d:
            row = {"dataset": m.name, "X": x, "d": d, "s": s}
            try:
                plan, report, _ = run_real(ctx.config(x, d), engine, virtual=m.virtual,
                                           max_workers=m.threads, sample=s, stats=stats)
            except ResourceError as exc:
                row["status"] = f"resource_gate({exc.available}<{exc.required})"
            except InfeasibleError:
                row["status"] = "infeasible"
            else:
                hb = plan.bounds["hoeffding"]
                base = math.ceil(hb)
                row.update(
                    ell=plan.ell, k_danda=plan.k, k_baseline=base, hoeffding=hb,
                    lemma1=plan.bounds["lemma1"], reduction_pct=reduction_pct(plan.k, base),
                    processing_time=report.total_elapsed, feasible=report.feasible,
                    status="ok" if report.feasible else "deadline_missed",
                )
            rows.append(row)
            _say(f"X={x} d={d}: k={row.get('k_danda', '-')} baseline={row.get('k_baseline', '-')} "
                 f"[{row['status']}]")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, BASELINE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    _write(m, "baseline.csv", buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_ppr(m: RunManifest, source: int, top: int = 20) -> int:
    if not m.graph:
        raise ValidationError("--graph is required")
    g = load_edge_list(m.graph, directed=m.directed)
    if not 0 <= source < g.n:
        raise ValidationError(f"source {source} out of range [0, {g.n})")
    params = derive_params(g, alpha=m.alpha, epsilon=m.epsilon, delta=m.delta, p_f=m.pf,
                           r_max=m.r_max, omega=m.omega)
    est = fora_query(g, source, params, derive_seed(m.seed, "ppr", source))
    oracle = power_iteration_ppr(g, source, m.alpha) if g.n <= 1000 else None
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["vertex", "score", "oracle"])
    for v, score in est.top(top):
        writer.writerow([v, f"{score:.6f}", "" if oracle is None else f"{oracle[v]:.6f}"])
    _say(f"walks={est.walks_performed} omega={params.omega} r_max={params.r_max:.3g}")
    return EXIT_OK


REPORT_COLUMNS = ["dataset", "X", "k_danda", "k_baseline", "reduction_pct", "processing_time"]


def _field(doc: dict, path: str, source: str):
    node = doc
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ParseError(f"{source}: missing field {path!r}", field=path)
        node = node[part]
    return node


def report_rows(paths) -> list[dict]:
    rows = []
    for path in paths:
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: not JSON ({exc})") from None
        k = int(_field(doc, "plan.k", path))
        base = math.ceil(float(_field(doc, "plan.bounds.hoeffding", path)))
        rows.append({
            "dataset": _field(doc, "dataset", path),
            "X": int(_field(doc, "plan.total_queries", path)),
            "k_danda": k,
            "k_baseline": base,
            "reduction_pct": (base - k) / base * 100.0,
            "processing_time": float(_field(doc, "report.total_elapsed", path)),
        })
    return rows


def cmd_report(paths, out: str | None = None) -> int:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(report_rows(paths))
    if out:
        Path(out).write_text(buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _run_flags(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--manifest", help="JSON manifest; explicit flags override its values")
    p.add_argument("--dataset", default=S)
    p.add_argument("--graph", default=S, help="SNAP edge list")
    p.add_argument("--directed", dest="directed", action="store_true", default=S)
    p.add_argument("--undirected", dest="directed", action="store_false", default=S)
    p.add_argument("--synthetic", default=S, help="constant:T | uniform:LO,HI | lognormal:MU,SIGMA,T_HAT")
    p.add_argument("--queries", type=_ints, default=S, help="query count (comma list for baseline)")
    p.add_argument("--query-file", dest="query_file", default=S)
    p.add_argument("--deadline", type=float, default=S)
    p.add_argument("--cmax", type=int, default=S)
    p.add_argument("--d", type=_floats, default=S, help="scaling factor (comma list for baseline)")
    p.add_argument("--c", type=int, default=S, help="preprocessing cores")
    p.add_argument("--confidence", type=int, choices=(90, 95, 99), default=S)
    p.add_argument("--z", type=float, default=S)
    p.add_argument("--p", type=float, default=S)
    p.add_argument("--e", type=float, default=S)
    p.add_argument("--sample-policy", dest="sample_policy", default=S, help="cochran | fraction=F")
    p.add_argument("--alpha", type=float, default=S)
    p.add_argument("--epsilon", type=float, default=S)
    p.add_argument("--delta", type=float, default=S)
    p.add_argument("--pf", type=float, default=S)
    p.add_argument("--r-max", dest="r_max", type=float, default=S)
    p.add_argument("--omega", type=int, default=S)
    p.add_argument("--t-hat", dest="t_hat", type=float, default=S)
    p.add_argument("--t-hat-factor", dest="t_hat_factor", type=float, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--virtual", action="store_true", default=S)
    p.add_argument("--ideal", action="store_true", default=S, help="unbounded-machine algorithm")
    p.add_argument("--max-retries", dest="max_retries", type=int, default=S)
    p.add_argument("--threads", type=int, default=S, help="real-mode worker cap (else COREPLAN_THREADS)")
    p.add_argument("--out", default=S, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coreplan", description="Plan the core count for a batch of PPR queries.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _run_flags(sub.add_parser("plan", help="preprocess and plan, write plan.json"))
    run = sub.add_parser("run", help="plan and execute, write report.json and trace.csv")
    _run_flags(run)
    run.add_argument("--plan", dest="plan_file", help="execute a saved plan.json")
    _run_flags(sub.add_parser("baseline", help="compare D&A_Real against the Hoeffding bound"))
    ppr = sub.add_parser("ppr", help="single PPR query")
    _run_flags(ppr)
    ppr.add_argument("--source", type=int, required=True)
    ppr.add_argument("--top", type=int, default=20)
    report = sub.add_parser("report", help="tidy CSV from report JSON files")
    report.add_argument("reports", nargs="+")
    report.add_argument("--csv", dest="csv_out")
    return parser


_LOCAL = {"command", "manifest", "plan_file", "source", "top", "reports", "csv_out"}


def manifest_from_args(args: argparse.Namespace) -> RunManifest:
    manifest = RunManifest.load(args.manifest) if getattr(args, "manifest", None) else RunManifest()
    for key, value in vars(args).items():
        if key not in _LOCAL:
            setattr(manifest, key, value)
    return manifest


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            return cmd_report(args.reports, args.csv_out)
        m = manifest_from_args(args)
        if args.command == "plan":
            return cmd_plan(m)
        if args.command == "run":
            return cmd_run(m, args.plan_file)
        if args.command == "baseline":
            return cmd_baseline(m)
        return cmd_ppr(m, args.source, args.top)
    except ResourceError as exc:
        _say(f"error: {exc}")
        return EXIT_RESOURCE
    except InfeasibleError as exc:
        _say(f"error: {exc}")
        return EXIT_INFEASIBLE
    except (ValidationError, CoreplanError, OSError) as exc:
        _say(f"error: {exc}")
        return EXIT_USAGE
