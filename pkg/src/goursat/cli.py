"""Command line entry point: analyze, contact, feedback, verify, generate."""
from __future__ import annotations

import argparse
import json
import random
import sys
import time
from pathlib import Path

from .classifier import TypeVector, classify
from .contact import ConstructionError, IntegralsNotFound, build_contact_chart
from .control import parse_prolong_spec, prolong_control
from .corpus import brunovsky, contact_problem, disguise, goursat_chain
from .expr import symbol
from .geometry import NotTotallyRegular
from .linalg import RankConfirmationError, Sampler
from .parse import ParseError
from .problem import InputError, Problem, load_problem, parse_hints, to_gsf
from .verifier import certify, feedback_check, static_feedback_inspect

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_GOURSAT = 2
EXIT_NO_INTEGRALS = 3
EXIT_CERTIFICATE = 4


class Run:
    """Accumulates the structured report and the timing of each stage."""

    def __init__(self, command: str):
        self.report = {"command": command}
        self.timing = {}
        self.human = []

    def stage(self, name, fn, *args, **kw):
        t0 = time.perf_counter()
        try:
            return fn(*args, **kw)
        finally:
            self.timing[name] = time.perf_counter() - t0

    def say(self, text=""):
        self.human.append(text)


def _derived_report(run: Run, D, verdict):
    dt = verdict.derived
    if dt is None:
        return
    run.report["derived_type"] = dt.entries
    run.say(f"refined derived type: {dt.entries}")
    bundles = {}
    for i in range(len(dt.cauchy)):
        bundles[f"Char V^({i})"] = dt.cauchy[i].pretty()
    for i, B in sorted(dt.intersections.items()):
        bundles[f"Char V^({i})_{i - 1}"] = B.pretty()
    run.report["cauchy_bundles"] = bundles
    if verdict.kin is not None:
        k = verdict.kin
        run.report["kinematics"] = {"velocity": k.velocity, "acceleration": k.acceleration,
                                    "deceleration": k.deceleration}
        run.say(f"velocity {k.velocity}, acceleration {k.acceleration}, deceleration {k.deceleration}")


def _verdict_report(run: Run, verdict):
    rep = {
        "is_goursat": verdict.is_goursat,
        "type": str(verdict.tau) if verdict.tau else None,
        "conditions": [{"name": n, "ok": ok, "detail": d} for n, ok, d in verdict.conditions],
        "identities": [{"name": i.name, "lhs": i.lhs, "rhs": i.rhs, "ok": i.ok} for i in verdict.identities],
        "diagnostic": verdict.diagnostic,
        "notes": list(verdict.notes),
    }
    if verdict.resolvent is not None:
        rep["singular_subbundle"] = [X.pretty() for X in verdict.singular.fields]
        rep["resolvent"] = verdict.resolvent.pretty()
    run.report["verdict"] = rep
    for name, bundle in run.report.get("cauchy_bundles", {}).items():
        run.say(f"  {name} = {bundle}")
    if verdict.is_goursat:
        run.say(f"Goursat bundle of type {verdict.tau}")
        if verdict.resolvent is not None:
            run.say(f"  resolvent bundle = {verdict.resolvent.pretty()}")
    else:
        run.say(verdict.diagnostic)
    for n in verdict.notes:
        run.say(f"  note: {n}")


def _chart_report(run: Run, chart):
    rep = {
        "algorithm": chart.algorithm,
        "x": str(chart.x),
        "x_strategy": chart.x_strategy,
        "total_derivative_generator": chart.Y_index + 1,
        "functions": {lab: str(f) for lab, _, _, _, f in chart.functions},
        "fundamental_functions": {str(j): [{"function": str(fi.func), "strategy": fi.strategy} for fi in fs]
                                  for j, fs in sorted(chart.fundamentals.items())},
        "filtration": [{"name": lv.name, "bundle": lv.bundle.pretty()} for lv in chart.filtration],
        "fundamental_bundles": {str(j): [w.pretty() for w in ws]
                                for j, ws in sorted(chart.fundamental_bundles.items())},
        "side_conditions": list(chart.side_conditions),
        "first_integral_requests": chart.requests,
    }
    if chart.pi_k is not None:
        rep["pi_k"] = chart.pi_k.pretty()
    run.report["contact_chart"] = rep
    run.say(f"{chart.algorithm}: x = {chart.x}  ({chart.x_strategy})")
    if chart.pi_k is not None:
        run.say(f"  Pi^{chart.tau.k} = {chart.pi_k.pretty()}")
    for lv in chart.filtration:
        run.say(f"  {lv.name} = {lv.bundle.pretty()}")
    for lab, _, _, _, f in chart.functions:
        run.say(f"  {lab} = {f}")
    for s in chart.side_conditions:
        run.say(f"  valid where {s}")
    run.say(f"  first integrals requested: {chart.requests}")


def _certificate_report(run: Run, cert):
    run.report["certificate"] = {
        "passed": cert.passed,
        "type": str(cert.tau),
        "count_ok": cert.count_ok,
        "rank_ok": cert.rank_ok,
        "annihilation_ok": cert.annihilation_ok,
        "annihilation_checks": len(cert.annihilation),
        "jacobian_rank": cert.independence_rank,
        "dim": cert.dim,
        "failures": cert.failures(),
        "side_conditions": cert.side_conditions,
        "dependencies": cert.dependencies,
    }
    run.say(f"certificate: {'PASS' if cert.passed else 'FAIL'} "
            f"({len(cert.annihilation)} annihilation identities, Jacobian rank {cert.independence_rank}/{cert.dim})")
    for f in cert.failures():
        run.say(f"  {f}")


def _load(args, run: Run) -> Problem:
    prob = load_problem(args.file)
    if args.prolong:
        if prob.system is None:
            raise InputError("--prolong needs a control-mode input")
        try:
            c, n = parse_prolong_spec(args.prolong)
            sys_ = prolong_control(prob.system, c, n)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        prob = Problem(sys_.chart, sys_.generators(), system=sys_, hints=prob.hints, seed=prob.seed,
                       chart_functions=prob.chart_functions, name=prob.name)
        run.report["prolongation"] = {"control": c, "order": n, "notes": sys_.notes}
    if getattr(args, "hints", None):
        try:
            text = Path(args.hints).read_text()
        except OSError as exc:
            raise InputError(f"cannot read hints file: {exc}") from None
        prob.hints.update(parse_hints(text, prob.chart, args.hints))
    return prob


def _sampler(args, prob: Problem) -> Sampler:
    seed = args.seed if args.seed is not None else (prob.seed if prob.seed is not None else 0)
    return Sampler(seed, max_attempts=args.max_attempts)


def _classify(run: Run, D):
    try:
        verdict = run.stage("classify", classify, D)
    except NotTotallyRegular as exc:
        from .classifier import GoursatVerdict

        verdict = GoursatVerdict(False, None, None)
        verdict.conditions.append(("regularity", False, str(exc)))
    _derived_report(run, D, verdict)
    _verdict_report(run, verdict)
    return verdict


def _construct(run: Run, D, verdict, hints, sampler):
    try:
        chart = run.stage("contact", build_contact_chart, D, verdict, hints, sampler.spawn())
    except IntegralsNotFound as exc:
        run.report["error"] = {
            "kind": "IntegralsNotFound",
            "message": str(exc),
            "residual": exc.residual.pretty() if exc.residual is not None else None,
            "needed": exc.needed,
            "found": [str(f) for f in exc.found],
            "instructions": "supply first integrals of the residual codistribution with "
                            "'hint <name> = <expr>' lines (or --hints FILE); 'hint x = ...' fixes x",
        }
        run.say(f"first integrals not found: {exc}")
        if exc.residual is not None:
            run.say(f"  residual codistribution: {exc.residual.pretty()}")
        run.say("  add 'hint <name> = <expr>' lines with first integrals and rerun")
        return None, EXIT_NO_INTEGRALS
    _chart_report(run, chart)
    cert = run.stage("certify", certify, D, chart.function_map(), chart.side_conditions)
    _certificate_report(run, cert)
    return chart, (EXIT_OK if cert.passed else EXIT_CERTIFICATE)


def cmd_analyze(args, run: Run) -> int:
    prob = _load(args, run)
    run.report["input"] = prob.to_json()
    sampler = _sampler(args, prob)
    run.report["seed"] = sampler.seed
    D = prob.distribution(sampler)
    verdict = _classify(run, D)
    return EXIT_OK if verdict.is_goursat else EXIT_NOT_GOURSAT


def cmd_contact(args, run: Run) -> int:
    prob = _load(args, run)
    run.report["input"] = prob.to_json()
    sampler = _sampler(args, prob)
    run.report["seed"] = sampler.seed
    D = prob.distribution(sampler)
    verdict = _classify(run, D)
    if not verdict.is_goursat:
        return EXIT_NOT_GOURSAT
    _, code = _construct(run, D, verdict, prob.hints, sampler)
    return code


def cmd_feedback(args, run: Run) -> int:
    prob = _load(args, run)
    if prob.system is None:
        raise InputError("feedback needs a control-mode input (time:, states:, controls:, dynamics:)")
    run.report["input"] = prob.to_json()
    sampler = _sampler(args, prob)
    run.report["seed"] = sampler.seed
    s = prob.system
    D = s.to_distribution(sampler)
    verdict = _classify(run, D)
    fb = feedback_check(D, s.time, verdict)
    rep = {"k": fb.k, "rho_k": fb.rho_k, "tested": fb.tested, "codistribution": fb.codistribution,
           "dt_member": fb.membership, "is_goursat": fb.is_goursat, "conclusion": fb.conclusion}
    run.report["feedback"] = rep
    run.say(f"static feedback: {fb.conclusion}")
    if fb.tested != "none":
        run.say(f"  dt {'in' if fb.membership else 'not in'} {fb.tested} = {fb.codistribution}")
    if not verdict.is_goursat:
        return EXIT_NOT_GOURSAT
    hints = dict(prob.hints)
    if fb.condition_met:
        hints.setdefault("x", symbol(s.time))
    chart, code = _construct(run, D, verdict, hints, sampler)
    if chart is not None:
        static = static_feedback_inspect(chart.function_map(), s.states, s.controls, s.time)
        rep["static_feedback_inspect"] = static
        run.say(f"  chart is a static feedback transformation: {static}")
    return code


def cmd_verify(args, run: Run) -> int:
    prob = _load(args, run)
    funcs = dict(prob.chart_functions)
    if args.chart:
        other = load_problem_chart(args.chart, prob)
        funcs.update(other)
    if not funcs:
        raise InputError("no chart given: add 'chart <label> = <expr>' lines or use --chart FILE")
    run.report["input"] = prob.to_json()
    run.report["input"]["chart"] = {k: str(v) for k, v in funcs.items()}
    sampler = _sampler(args, prob)
    run.report["seed"] = sampler.seed
    D = prob.distribution(sampler)
    try:
        cert = run.stage("certify", certify, D, funcs)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _certificate_report(run, cert)
    return EXIT_OK if cert.passed else EXIT_CERTIFICATE


def load_problem_chart(path: str, prob: Problem) -> dict:
    from .problem import _logical_lines, _parse_expr
    import re

    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read chart file: {exc}") from None
    out = {}
    for lineno, line in _logical_lines(text):
        m = re.fullmatch(r"(?:chart\s+)?(\S+)\s*=\s*(.+)", line)
        if not m:
            raise InputError(f"{path} line {lineno}: expected 'chart <label> = <expr>'")
        out[m.group(1)] = _parse_expr(m.group(2), prob.chart, f"{path} line {lineno}")
    return out


def cmd_generate(args) -> int:
    try:
        if args.kind == "chain":
            prob = goursat_chain(int(args.spec))
        elif args.kind == "brunovsky":
            prob = brunovsky(TypeVector.parse(args.spec))
        else:
            prob = contact_problem(TypeVector.parse(args.spec))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    comment = f"{prob.name}, generated"
    if args.disguise:
        if prob.system is not None:
            print("error: --disguise applies to distribution-mode output only", file=sys.stderr)
            return EXIT_INPUT
        prob, _ = disguise(prob, random.Random(args.seed or 0))
        comment += f" and disguised with seed {args.seed or 0}"
    prob.seed = args.seed if args.seed is not None else prob.seed
    text = to_gsf(prob, comment)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="goursat", description="Recognize Goursat bundles and build contact coordinates.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("analyze", "refined derived type and Goursat verdict"),
                           ("contact", "construct and certify contact coordinates"),
                           ("feedback", "static feedback test for a control system"),
                           ("verify", "certify a user supplied chart")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("file")
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--json", action="store_true", help="print the machine report")
        s.add_argument("--max-attempts", type=int, default=10, help="rank resampling attempts")
        s.add_argument("--prolong", default=None, metavar="CONTROL:N")
        s.add_argument("--hints", default=None, metavar="FILE")
        if name == "verify":
            s.add_argument("--chart", default=None, metavar="FILE")
    g = sub.add_parser("generate", help="write a corpus problem file")
    g.add_argument("kind", choices=("chain", "brunovsky", "contact"))
    g.add_argument("spec", help="chain length, or a type vector such as 2,0,1")
    g.add_argument("--disguise", action="store_true")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("-o", "--output", default=None)
    return p


COMMANDS = {"analyze": cmd_analyze, "contact": cmd_contact, "feedback": cmd_feedback, "verify": cmd_verify}


def run_command(argv) -> tuple:
    """Run a non-generate command; returns (exit code, machine report, human text)."""
    args = build_parser().parse_args(argv)
    run = Run(args.command)
    t0 = time.perf_counter()
    try:
        code = COMMANDS[args.command](args, run)
    except (InputError, ParseError) as exc:
        run.report["error"] = {"kind": "InputError", "message": str(exc)}
        run.say(f"input error: {exc}")
        code = EXIT_INPUT
    except (RankConfirmationError, ConstructionError) as exc:
        run.report["error"] = {"kind": type(exc).__name__, "message": str(exc)}
        run.say(f"error: {exc}")
        code = EXIT_CERTIFICATE
    run.timing["total"] = time.perf_counter() - t0
    run.report["exit_code"] = code
    run.say("timing: " + ", ".join(f"{k} {v:.2f}s" for k, v in run.timing.items()))
    return code, run.report, "\n".join(run.human)


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if argv and argv[0] == "generate":
        return cmd_generate(build_parser().parse_args(argv))
    if "--json" not in argv and len(argv) < 2:
        build_parser().parse_args(argv)
    code, report, human = run_command(argv)
    print(dumps(report) if "--json" in argv else human)
    return code


if __name__ == "__main__":
    sys.exit(main())
