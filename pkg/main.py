#!/usr/bin/env python3
# ======================================================================
# main.py – unified CLI for the marginals tool
#   gen → analyze → family / verify-reductions → simulate / probe
#   Exit codes: 0 determined / success, 10 undetermined, 2 refusal or
#   usage error, 3 marginals differ, 1 error.
# ======================================================================

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from Consensus.ConsensusOps import (
    MeasurementPlan,
    SimConfig,
    build_consensus_measurements,
    computational_plan,
    necessity_probe,
    run_trials,
)
from Consensus.ConsensusParams import PROBE_OUTCOMES, PROBE_SAMPLES, SIM_SEED, TRIALS, WORKERS
from Reductions.ReductionOps import (
    ReductionFamily,
    family_member,
    sample_member,
    verify_same_reductions,
)
from Schmidt.SchmidtOps import analyze, s_local_analyze
from Schmidt.SchmidtParams import ANALYSIS_SEED
from StateFactory import KINDS, generate_state
from Tensors.StateFiles import load_state, read_json, save_state, write_json
from Tensors.TensorParams import DATA_DIR, TOLERANCES

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_REFUSED = 2
EXIT_DIFFER = 3
EXIT_UNDETERMINED = 10


def _path(p: str) -> str:
    return str(Path(p).expanduser().resolve())


def _sibling(src: str, suffix: str) -> str:
    """<dir>/<stem><suffix> next to an input file."""
    src = Path(_path(src))
    return str(src.with_name(src.stem + suffix))


def _ints(text: str | None) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()] if text else []


def _floats(text: str | None) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()] if text else []


def _parties(text: str | None, n: int, flag: str) -> list[int]:
    """1-based comma list → 0-based party indices."""
    parties = [i - 1 for i in _ints(text)]
    if any(not 0 <= i < n for i in parties):
        raise ValueError(f"{flag} {text}: parties are numbered 1..{n}")
    return parties


# ──────────────────────────────────────────────────────────────────────
# Command helpers
# ---------------------------------------------------------------------


def cmd_gen(ns) -> int:
    # bad numbers and bad parameters are both usage errors here
    try:
        state = generate_state(
            ns.kind,
            n=ns.n,
            d=ns.d,
            k=ns.k,
            dims=_ints(ns.dims) or None,
            lambdas=_floats(ns.lam) or None,
            blocks=ns.blocks,
            seed=ns.seed,
            scramble_seed=ns.seed if ns.scramble else None,
        )
    except ValueError as exc:
        print(f"[gen] usage error: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    save_state(state, _path(ns.output))
    print(f"[gen] {ns.kind} dims={list(state.dims)} → {_path(ns.output)}")
    return EXIT_OK


def cmd_analyze(ns) -> int:
    state = load_state(_path(ns.path))
    tol = TOLERANCES.with_check_tolerance(ns.tol) if ns.tol is not None else TOLERANCES
    pivot = _parties(str(ns.pivot), state.n, "--pivot")[0] if ns.pivot is not None else None
    if ns.subset:
        report = s_local_analyze(
            state, _parties(ns.subset, state.n, "--subset"), pivot=pivot, seed=ns.seed, tol=tol
        )
    else:
        report = analyze(state, pivot=pivot, seed=ns.seed, tol=tol)

    out = _path(ns.output) if ns.output else _sibling(ns.path, ".report.json")
    write_json(report.to_dict(), out)
    bound = " (lower bound)" if report.lower_bound and report.undetermined else ""
    print(
        f"[analyze] {report.verdict} – Sch = {report.schmidt_number}{bound}, "
        f"path {report.path}, pivot {report.pivot + 1} → {out}"
    )
    if report.ghz_form is not None:
        print(f"[analyze] GHZ form α = {report.ghz_form.alpha:.6f}, β = {report.ghz_form.beta:.6f}")
    return EXIT_UNDETERMINED if report.undetermined else EXIT_OK


def cmd_family(ns) -> int:
    state = load_state(_path(ns.path))
    try:
        fam = ReductionFamily.from_state(state, seed=ns.seed)
    except ValueError as exc:
        print(f"[family] refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED

    if ns.phases is not None:
        members = [family_member(fam, _floats(ns.phases))]
    else:
        members = [sample_member(fam, ns.seed + t) for t in range(ns.sample)]

    out_dir = Path(_path(ns.out_dir) if ns.out_dir else _sibling(ns.path, "_family"))
    summary = {"L": fam.L, "special_case": fam.special_case, "members": []}
    failed = 0
    for idx, member in enumerate(members, start=1):
        target = out_dir / f"member_{idx}.json"
        save_state(member, target)
        check = verify_same_reductions(state, member)
        failed += not check
        summary["members"].append({"file": str(target), **check.to_dict()})
        worst = max(check.residuals)
        print(f"[family] member {idx}: max residual {worst:.2e} → {target}")
    write_json(summary, out_dir / "family.json")

    if failed:
        print(f"[family] {failed} member(s) failed verification", file=sys.stderr)
        return EXIT_ERROR
    print(f"[family] L = {fam.L}, {len(members)} verified member(s) → {out_dir}")
    return EXIT_OK


def cmd_verify(ns) -> int:
    a = load_state(_path(ns.a))
    b = load_state(_path(ns.b))
    check = verify_same_reductions(a, b)
    out = _path(ns.output) if ns.output else _sibling(ns.a, ".reductions.json")
    write_json(check.to_dict(), out)
    verdict = "same" if check else "different"
    print(f"[verify-reductions] {verdict} marginals, max residual {max(check.residuals):.2e} → {out}")
    return EXIT_OK if check else EXIT_DIFFER


def cmd_simulate(ns) -> int:
    state = load_state(_path(ns.path))
    config = SimConfig(
        trials=ns.trials,
        seed=ns.seed,
        failed_agents=frozenset(_parties(ns.fail, state.n, "--fail")),
        channel_drop_probability=ns.drop,
        workers=ns.workers,
    )

    if ns.plan == "computational":
        plan = computational_plan(state.dims)
    elif ns.plan:
        plan = MeasurementPlan.from_dict(read_json(_path(ns.plan)), source=ns.plan)
    else:
        report = analyze(state)
        if not report.undetermined:
            print("[simulate] refused: state is determined and no --plan was given", file=sys.stderr)
            return EXIT_REFUSED
        plan = build_consensus_measurements(state, report.certificate)

    stats = run_trials(state, plan, config)
    out = _path(ns.output) if ns.output else _sibling(ns.path, ".trials.json")
    write_json({"certified_plan": plan.certified, **stats.to_dict()}, out)
    print(
        f"[simulate] {stats.trials} trials, agreement {stats.agreement_frequency:.4f} "
        f"among agents {[i + 1 for i in stats.live_agents]} → {out}"
    )

    if plan.certified and not (stats.exact_consensus and stats.agreement_frequency == 1.0):
        print("[simulate] agreement invariant violated by a certified plan", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def cmd_probe(ns) -> int:
    state = load_state(_path(ns.path))
    report = necessity_probe(state, samples=ns.samples, seed=ns.seed, outcomes=ns.outcomes)
    out = _path(ns.output) if ns.output else _sibling(ns.path, ".probe.json")
    write_json(report.to_dict(), out)
    if report.structurally_excluded:
        agents = [i + 1 for i in report.structurally_excluded]
        print(f"[probe] agents {agents} have rank-1 supports, structurally excluded → {out}")
    else:
        print(f"[probe] min disagreement {report.min_disagreement:.4f} over {report.samples} plans → {out}")
    return EXIT_OK


# ──────────────────────────────────────────────────────────────────────
# Parser
# ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        description="Local determinability of pure states, reduction families and consensus simulation",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = p.add_subparsers(dest="cmd", required=True)

    # gen ------------------------------------------------------------
    sp = sub.add_parser("gen", help="write a named state to JSON")
    sp.add_argument("kind", choices=KINDS)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--d", type=int, default=None)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--dims", default=None, help="comma list, e.g. 3,3,3")
    sp.add_argument("--lambda", dest="lam", default=None, help="comma list summing to 1")
    sp.add_argument("--blocks", type=int, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--scramble", action="store_true", help="apply Haar-random local unitaries")
    sp.add_argument("-o", "--output", default=f"{DATA_DIR}/state.json")
    sp.set_defaults(func=cmd_gen)

    # analyze --------------------------------------------------------
    sp = sub.add_parser("analyze", help="verdict, Schmidt number and certificate")
    sp.add_argument("path")
    sp.add_argument("--tol", type=float, default=None, help="orthogonality/reconstruction/eigen tolerance")
    sp.add_argument("--pivot", type=int, default=None)
    sp.add_argument("--subset", default=None, help="comma list of parties, e.g. 2,3")
    sp.add_argument("--seed", type=int, default=ANALYSIS_SEED)
    sp.add_argument("-o", "--output", default=None)
    sp.set_defaults(func=cmd_analyze)

    # family ---------------------------------------------------------
    sp = sub.add_parser("family", help="members of the reduction family")
    sp.add_argument("path")
    grp = sp.add_mutually_exclusive_group(required=True)
    grp.add_argument("--phases", default=None, help="comma list θ_1..θ_L")
    grp.add_argument("--sample", type=int, default=None)
    sp.add_argument("--seed", type=int, default=ANALYSIS_SEED)
    sp.add_argument("--out-dir", default=None)
    sp.set_defaults(func=cmd_family)

    # verify-reductions ----------------------------------------------
    sp = sub.add_parser("verify-reductions", help="compare all (n-1)-party marginals")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("-o", "--output", default=None)
    sp.set_defaults(func=cmd_verify)

    # simulate -------------------------------------------------------
    sp = sub.add_parser("simulate", help="consensus trials under fail-stop faults")
    sp.add_argument("path")
    sp.add_argument("--trials", type=int, default=TRIALS)
    sp.add_argument("--seed", type=int, default=SIM_SEED)
    sp.add_argument("--fail", default=None, help="comma list of failed agents")
    sp.add_argument("--drop", type=float, default=0.0)
    sp.add_argument("--workers", type=int, default=WORKERS)
    sp.add_argument("--plan", default=None, help="plan JSON file or 'computational'")
    sp.add_argument("-o", "--output", default=None)
    sp.set_defaults(func=cmd_simulate)

    # probe ----------------------------------------------------------
    sp = sub.add_parser("probe", help="random-plan necessity probe")
    sp.add_argument("path")
    sp.add_argument("--samples", type=int, default=PROBE_SAMPLES)
    sp.add_argument("--seed", type=int, default=SIM_SEED)
    sp.add_argument("--outcomes", type=int, default=PROBE_OUTCOMES)
    sp.add_argument("-o", "--output", default=None)
    sp.set_defaults(func=cmd_probe)

    return p


# ──────────────────────────────────────────────────────────────────────
# entry-point
# ---------------------------------------------------------------------


def main(argv: list[str] | None = None) -> None:
    ns = build_parser().parse_args(argv)
    try:
        code = ns.func(ns)
    except KeyboardInterrupt:  # pragma: no cover
        print("\n[user cancelled]", file=sys.stderr)
        sys.exit(EXIT_ERROR)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"[main] error: {exc}", file=sys.stderr)
        sys.exit(EXIT_ERROR)
    sys.exit(code)


if __name__ == "__main__":
    main()
