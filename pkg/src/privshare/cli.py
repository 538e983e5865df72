"""Command-line harness.

    privshare simulate SCENARIO --out DIR
    privshare attack SCENARIO [--coalition 0,1] [--degree 3] --out DIR
    privshare verify-privacy SCENARIO [--trials 100] --out DIR
    privshare check-topology TOPOLOGY --f 1 [--coalition 2]
    privshare demo {example1,table2,sec6}

SCENARIO may be a path or the name of a shipped scenario (``sec6``,
``example1``, ``table2_problem2``, ``fig4a``, ``fig4b``, ``fig3a_standin``).

Exit codes: 0 success, 1 runtime failure, 2 invalid input, 3 topology not
admissible for the coalition, 4 topology check failed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import itertools
import json
import os
import sys
import tempfile
import time
from importlib.resources import files
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .adversary import AdversaryView, attack, attack_report, recover_aggregate
from .graph import (
    Disconnected,
    Topology,
    detect_privacy_failures,
    edge_connectivity,
    min_degree,
    vertex_connectivity,
)
from .obfuscation import aggregate, obfuscate, validate_assumptions
from .optimizer import ExecutionTrace, InvalidScenario, Metrics, Scenario, metrics, run
from .polynomial import Polynomial
from .privacy import (
    InconsistentAlternative,
    NotAdmissible,
    construct_alternative_shares,
    end_to_end_indistinguishability,
    observable_table,
    sample_alternative_objectives,
)

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID, EXIT_NOT_ADMISSIBLE, EXIT_TOPOLOGY = 0, 1, 2, 3, 4

SHIPPED = ("example1", "sec6", "table2_problem2", "fig4a", "fig4b", "fig3a_standin")

# reference values reproduced by the demos
TABLE1_EXPECTED = {
    1: Polynomial([0, -36, 25, -8, 1]),
    2: Polynomial([0, -108, 54, -12, 1]),
}
SEC6_TOLERANCES = {"mean": 1e-2, "max_dev": 1e-3, "rms_sq": 1e-3, "agreement": 2e-2}


class UsageError(Exception):
    pass


# -- io helpers ------------------------------------------------------------------------


def _read_json(path: str) -> Any:
    p = Path(path)
    if not p.exists() and path in SHIPPED + ("k3_topology", "fig4b_topology"):
        return json.loads(files("privshare.scenarios").joinpath(f"{path}.json").read_text())
    try:
        return json.loads(p.read_text())
    except FileNotFoundError as exc:
        raise UsageError(f"cannot read {path}: no such file") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def load_scenario(path: str, seed: int | None = None) -> Scenario:
    data = _read_json(path)
    if isinstance(data, dict):
        env_seed = os.environ.get("PRIVSHARE_SEED")
        if seed is not None:
            data = dict(data, seed=seed)
        elif env_seed is not None:
            data = dict(data, seed=int(env_seed))
    return Scenario.from_json(data)


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_json(path: Path, obj: Any) -> None:
    _write_atomic(path, json.dumps(obj, indent=2, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def trace_csv(trace: ExecutionTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "agent", "v", "x_next", "alpha"])
    for k in range(trace.rounds):
        for j in range(trace.x.shape[1]):
            w.writerow([k + 1, j, repr(float(trace.v[k, j])), repr(float(trace.x[k + 1, j])), repr(float(trace.alpha[k]))])
    return buf.getvalue()


def metrics_csv(m: Metrics) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "mean", "max_dev", "rms_sq", "f_of_mean"])
    for row in zip(m.iteration, m.mean, m.max_dev, m.rms_sq, m.f_of_mean):
        w.writerow([int(row[0])] + [repr(float(v)) for v in row[1:]])
    return buf.getvalue()


def topology_report(g: Topology, coalition: Sequence[int]) -> dict:
    f = len(coalition)
    out: dict[str, Any] = {"nodes": g.node_count, "edges": len(g.edges), "min_degree": min_degree(g)}
    try:
        kappa = vertex_connectivity(g)
        lam = edge_connectivity(g)
    except Disconnected:
        kappa = lam = 0
    out.update(
        vertex_connectivity=kappa,
        edge_connectivity=lam,
        whitney_holds=kappa <= lam <= out["min_degree"],
        coalition_size=f,
        admissible=kappa > f,
        failures=detect_privacy_failures(g, coalition).to_json(),
    )
    return out


def _parse_coalition(text: str | None) -> tuple[int, ...] | None:
    if text is None:
        return None
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(sorted({int(t) for t in text.split(",")}))
    except ValueError as exc:
        raise UsageError(f"bad coalition {text!r}; expected comma-separated node ids") from exc


def _apply_overrides(sc: Scenario, args) -> Scenario:
    changes = {}
    coalition = _parse_coalition(getattr(args, "coalition", None))
    if coalition is not None:
        if any(not 0 <= c < sc.size for c in coalition):
            raise InvalidScenario([f"coalition: node ids must lie in [0, {sc.size})"])
        changes["coalition"] = coalition
    if getattr(args, "iterations", None) is not None:
        if args.iterations < 1:
            raise InvalidScenario(["iterations: must be a positive integer"])
        changes["iterations"] = args.iterations
    if getattr(args, "degree", None) is not None:
        changes["attack_degree"] = args.degree
    return dataclasses.replace(sc, **changes) if changes else sc


def _base_report(sc: Scenario, trace: ExecutionTrace, started: float) -> dict:
    m = metrics(trace, sc.objectives)
    f_hat = obfuscate(list(sc.objectives), sc.shares, sc.topology)
    assumptions = validate_assumptions(f_hat, sc.feasible.lower, sc.feasible.upper)
    return {
        "seed": sc.seed,
        "config_hash": sc.config_hash(),
        "scenario": sc.to_json(),
        "metrics": {
            "final": m.final(),
            "series": {
                "mean": m.mean.tolist(),
                "max_dev": m.max_dev.tolist(),
                "rms_sq": m.rms_sq.tolist(),
                "f_of_mean": m.f_of_mean.tolist(),
            },
        },
        "assumptions": assumptions.to_json(),
        "topology": topology_report(sc.topology, sc.coalition),
        "duration_s": time.perf_counter() - started,
    }


# -- commands ------------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    sc = _apply_overrides(load_scenario(args.scenario, args.seed), args).resolve()
    trace = run(sc)
    out = Path(args.out)
    _write_atomic(out / "trace.csv", trace_csv(trace))
    _write_atomic(out / "metrics.csv", metrics_csv(metrics(trace, sc.objectives)))
    report = _base_report(sc, trace, started)
    _write_json(out / "report.json", report)
    fin = report["metrics"]["final"]
    print(f"{sc.name}: {sc.iterations} rounds, mean={fin['mean']:.6g} max_dev={fin['max_dev']:.3g} rms_sq={fin['rms_sq']:.3g}")
    return EXIT_OK


def run_attack(sc: Scenario) -> tuple[ExecutionTrace, dict]:
    sc = sc.resolve()
    trace = run(sc)
    view = AdversaryView.from_scenario(sc, trace)
    degree = sc.attack_degree if sc.attack_degree is not None else max(sc.max_objective_degree() - 1, 0)
    result = attack(view, degree)
    f_hat = obfuscate(list(sc.objectives), sc.shares, sc.topology)
    report = attack_report(result, sc.objectives, f_hat)
    report.update(coalition=list(sc.coalition), gradient_degree=degree)
    if view.good_agents and len(result.recovered) == len(view.good_agents):
        f_total, f_good = recover_aggregate(view, result.recovered)
        report["aggregate"] = {"total": f_total.to_json(), "good_agents": f_good.to_json()}
    return trace, report


def cmd_attack(args) -> int:
    started = time.perf_counter()
    sc = _apply_overrides(load_scenario(args.scenario, args.seed), args).resolve()
    trace, report = run_attack(sc)
    report["seed"] = sc.seed
    report["config_hash"] = sc.config_hash()
    report["duration_s"] = time.perf_counter() - started
    _write_json(Path(args.out) / "attack_report.json", report)
    for j, entry in report["agents"].items():
        print(f"agent {j}: {entry['verdict']}")
    if not report["agents"]:
        print("no good agents to attack")
    return EXIT_OK


def verify_trials(sc: Scenario, trials: int, rng: np.random.Generator) -> dict:
    sc = sc.resolve()
    base_trace = run(sc)
    degree = sc.max_objective_degree()
    rows = []
    for t in range(trials):
        f_alt = sample_alternative_objectives(sc.objectives, sc.coalition, rng, degree)
        entry: dict[str, Any] = {"trial": t, "alternative_objectives": [p.to_json() for p in f_alt]}
        try:
            res = construct_alternative_shares(sc.objectives, sc.shares, f_alt, sc.topology, sc.coalition, rng)
        except InconsistentAlternative as exc:
            entry.update(verdict=False, error=str(exc))
            rows.append(entry)
            continue
        alt = dataclasses.replace(sc, objectives=tuple(f_alt), shares=res.shares)
        same_trace = run(alt).same_execution(base_trace)
        ok = res.verified and same_trace
        entry.update(
            verdict=ok,
            residual=res.residual,
            min_singular_value=res.min_singular_value,
            observables_match=res.verified,
            identical_trace=same_trace,
            shares=res.to_json()["shares"],
            observables=observable_table(sc.objectives, sc.shares, f_alt, res.shares, sc.topology, sc.coalition),
        )
        rows.append(entry)
    return {
        "verdict": all(r["verdict"] for r in rows),
        "trials": len(rows),
        "max_residual": max((r.get("residual", float("inf")) for r in rows), default=0.0),
        "results": rows,
    }


def cmd_verify_privacy(args) -> int:
    started = time.perf_counter()
    sc = _apply_overrides(load_scenario(args.scenario, args.seed), args).resolve()
    topo = topology_report(sc.topology, sc.coalition)
    if not topo["admissible"]:
        f = len(sc.coalition)
        print(
            f"topology is not {f}-admissible: vertex connectivity {topo['vertex_connectivity']} <= coalition size {f}",
            file=sys.stderr,
        )
        fail = topo["failures"]
        if fail["individual"]:
            print(f"individual privacy loss: agents {fail['individual']} have degree < {f + 1}", file=sys.stderr)
        if fail["groups"]:
            print(f"group privacy loss: components {fail['groups']}", file=sys.stderr)
        _write_json(Path(args.out) / "verifier_report.json", {"verdict": False, "topology": topo})
        return EXIT_NOT_ADMISSIBLE
    if args.trials < 0:
        raise UsageError("--trials must be non-negative")
    rng = np.random.default_rng([sc.seed, 0x5EED])
    report = verify_trials(sc, args.trials, rng)
    report.update(seed=sc.seed, config_hash=sc.config_hash(), topology=topo, duration_s=time.perf_counter() - started)
    _write_json(Path(args.out) / "verifier_report.json", report)
    print(f"{report['trials']} trials, all verified: {report['verdict']}, max residual {report['max_residual']:.3g}")
    return EXIT_OK if report["verdict"] else EXIT_RUNTIME


def cmd_check_topology(args) -> int:
    data = _read_json(args.topology)
    if isinstance(data, dict) and "topology" in data:
        data = data["topology"]
    try:
        g = Topology.from_json(data)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc
    if args.f < 0:
        raise UsageError("--f must be non-negative")
    coalition = _parse_coalition(args.coalition)
    base = topology_report(g, coalition or ())
    kappa, lam, delta = base["vertex_connectivity"], base["edge_connectivity"], base["min_degree"]
    admissible = kappa > args.f
    print(f"vertex connectivity kappa = {kappa}")
    print(f"edge connectivity lambda = {lam}")
    print(f"minimum degree delta = {delta}")
    print(f"kappa <= lambda <= delta: {'holds' if base['whitney_holds'] else 'VIOLATED'}")
    print(f"{args.f}-admissible: {'yes' if admissible else 'no'}")
    if delta < args.f + 1:
        print(f"minimum degree {delta} < f+1 = {args.f + 1}")
    coalitions = [coalition] if coalition is not None else [
        c for k in range(1, args.f + 1) for c in itertools.combinations(g.nodes, k) if k < g.node_count
    ]
    findings = []
    for c in coalitions:
        rep = detect_privacy_failures(g, c)
        if not rep.empty:
            findings.append(rep.to_json())
    for fnd in findings:
        print(f"coalition {fnd['coalition']}: individual {fnd['individual']} groups {fnd['groups']}")
    if args.out:
        _write_json(Path(args.out) / "topology_report.json", dict(base, f=args.f, admissible=admissible, findings=findings))
    return EXIT_OK if admissible else EXIT_TOPOLOGY


def _demo_example1() -> bool:
    started = time.perf_counter()
    sc = load_scenario("example1")
    _, report = run_attack(sc)
    elapsed = time.perf_counter() - started
    ok = True
    print(f"{'agent':>5}  {'expected (no constant)':<32}  {'recovered':<40}  distance")
    for j, want in TABLE1_EXPECTED.items():
        got = Polynomial(report["agents"][str(j)]["objective_coeffs"])
        d = got.distance(want, ignore_constant=True)
        ok &= d <= 1e-2
        print(f"{j:>5}  {str(want):<32}  {str(Polynomial([round(c, 6) for c in got.coeffs])):<40}  {d:.2e}")
    print(f"runtime {elapsed:.3f}s")
    return ok


def _demo_table2() -> bool:
    p1, p2 = load_scenario("sec6"), load_scenario("table2_problem2")
    h1 = obfuscate(list(p1.objectives), p1.shares, p1.topology)
    h2 = obfuscate(list(p2.objectives), p2.shares, p2.topology)
    print(f"{'agent':>5}  {'problem 1 obfuscated':<30}  {'problem 2 obfuscated':<30}  equal")
    for i, (a, b) in enumerate(zip(h1, h2)):
        print(f"{i:>5}  {str(a):<30}  {str(b):<30}  {a == b}")
    same = h1 == h2
    identical = end_to_end_indistinguishability(p1, p2)
    print(f"aggregate problem 1: {aggregate(p1.objectives)}   problem 2: {aggregate(p2.objectives)}")
    print(f"identical executions: {identical}")
    return same and identical


def _demo_sec6() -> bool:
    sc = load_scenario("sec6").resolve()
    m = metrics(run(sc), sc.objectives).final()
    plain = metrics(run(sc.with_zero_shares()), sc.objectives).final()
    checks = [
        ("|mean|", abs(m["mean"]), SEC6_TOLERANCES["mean"]),
        ("max deviation", m["max_dev"], SEC6_TOLERANCES["max_dev"]),
        ("rms error", m["rms_sq"], SEC6_TOLERANCES["rms_sq"]),
        ("|mean - mean without shares|", abs(m["mean"] - plain["mean"]), SEC6_TOLERANCES["agreement"]),
    ]
    print(f"after {m['iteration']} rounds (optimum x* = 0):")
    ok = True
    for label, value, tol in checks:
        good = value <= tol
        ok &= good
        print(f"  {label:<30} {value:.4e}  (tolerance {tol:g})  {'ok' if good else 'EXCEEDED'}")
    return ok


DEMOS = {"example1": _demo_example1, "table2": _demo_table2, "sec6": _demo_sec6}


def cmd_demo(args) -> int:
    ok = DEMOS[args.name]()
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_RUNTIME


# -- entry point ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--iterations", type=int, default=None, help="override the iteration count")

    p = argparse.ArgumentParser(prog="privshare", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="run the optimizer and write trace/metrics/report")
    s.add_argument("scenario")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("attack", parents=[common], help="simulate, then mount the coalition's reconstruction attack")
    s.add_argument("scenario")
    s.add_argument("--coalition", default=None, help="comma-separated node ids")
    s.add_argument("--degree", type=int, default=None, help="gradient polynomial degree to fit")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_attack)

    s = sub.add_parser("verify-privacy", parents=[common], help="construct and check indistinguishable alternatives")
    s.add_argument("scenario")
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--coalition", default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_verify_privacy)

    s = sub.add_parser("check-topology", help="connectivity, admissibility and privacy-failure analysis")
    s.add_argument("topology")
    s.add_argument("--f", type=int, required=True, help="coalition size")
    s.add_argument("--coalition", default=None, help="analyse this coalition only")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_check_topology)

    s = sub.add_parser("demo", help="reproduce a reference result")
    s.add_argument("name", choices=sorted(DEMOS))
    s.set_defaults(func=cmd_demo)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidScenario as exc:
        for msg in exc.problems:
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NotAdmissible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_ADMISSIBLE
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
