"""Command-line front end: simulate matches, audit transcripts, solve benchmarks, reproduce cases."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd

from .config import GAMES_DIR, REPORTS_DIR, TRANSCRIPTS_DIR, ensure_directories
from .equilibria import corr_val, per_context_solutions, stackelberg_polytope
from .errors import LabError, ShapeError, UnknownComponentError
from .games import BayesianGame, Transcript, game_to_dict, load_game, to_polytope_game
from .geometry import Polytope
from .harness import CASES, GAMES, MatchConfig, build_game, reproduce, reproduce_all, run_match
from .regret import NOTIONS, audit, contextual_swap_diagnostics

LOGGER = logging.getLogger(__name__)


def _print_progress(message: str, fraction: float) -> None:
    LOGGER.info("%3.0f%% %s", 100 * fraction, message)


def _emit(payload: Dict[str, Any], out: Optional[str]) -> None:
    text = json.dumps(payload, indent=2, default=str)
    if out is None:
        print(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    LOGGER.info("Wrote %s", path)


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = MatchConfig.from_json(Path(args.config))
    config.transcript_path = Path(args.out) if args.out else TRANSCRIPTS_DIR / f"{Path(args.config).stem}.csv"
    transcript = run_match(config, progress_cb=_print_progress)
    print(
        json.dumps(
            {
                "status": "ok",
                "transcript": str(config.transcript_path),
                "T": transcript.T,
                "optimizer_total": transcript.optimizer_total,
                "optimizer_average": transcript.optimizer_average,
            },
            indent=2,
        )
    )
    return 0


def _cmd_regret(args: argparse.Namespace) -> int:
    payload = json.loads(Path(args.polytope).read_text(encoding="utf-8"))
    # Accept either a bare polytope or a saved polytope game.
    P = Polytope.from_dict(payload["polytope"] if payload.get("type") == "polytope" else payload)
    transcript = Transcript.read_csv(Path(args.transcript))
    p = json.loads(args.p) if args.p else None
    if args.diagnostics:
        if p is None:
            raise ShapeError("--diagnostics needs the context weights --p")
        _emit(contextual_swap_diagnostics(P, p, transcript.r, transcript.x).to_dict(), args.out)
        return 0
    report = audit(P, transcript.r, transcript.x, args.notion, p=p)
    _emit(report.to_dict(), args.out)
    return 0


def _cmd_solve(args: argparse.Namespace) -> int:
    G = load_game(Path(args.game))
    if args.benchmark == "stackelberg":
        solution = stackelberg_polytope(to_polytope_game(G), workers=args.workers)
        _emit(solution.to_dict(), args.out)
        return 0
    if not isinstance(G, BayesianGame):
        raise ShapeError(f"The {args.benchmark} benchmark needs a Bayesian game")
    if args.benchmark == "perconval":
        solutions = per_context_solutions(G)
        payload = {
            "value": float(np.dot(G.p, [s.value for s in solutions])),
            "contexts": [s.to_dict() for s in solutions],
        }
        _emit(payload, args.out)
        return 0
    _emit(corr_val(G, args.epsilon).to_dict(), args.out)
    return 0


def _cmd_generate(args: argparse.Namespace) -> int:
    params = json.loads(args.params) if args.params else {}
    T = int(params.pop("T", 40))
    seed = params.pop("seed", None)
    if args.graph:
        if args.name != "dominating_set":
            raise UnknownComponentError(f"--graph only applies to dominating_set, not {args.name}")
        params["graph_file"] = args.graph
    bundle = build_game({"name": args.name, "params": params}, T, seed)
    out = Path(args.out) if args.out else GAMES_DIR / f"{args.name}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(game_to_dict(bundle.source), indent=2), encoding="utf-8")
    if bundle.schedule is not None:
        schedule_path = out.with_name(f"{out.stem}_schedule.csv")
        frame = pd.DataFrame(bundle.schedule, columns=[f"w{i}" for i in range(bundle.schedule.shape[1])])
        frame.insert(0, "t", np.arange(1, len(frame) + 1))
        frame.to_csv(schedule_path, index=False, float_format="%.17g")
        LOGGER.info("Wrote %s", schedule_path)
    print(json.dumps({"status": "ok", "game": str(out)}, indent=2))
    return 0


def _cmd_reproduce(args: argparse.Namespace) -> int:
    report_dir = Path(args.report_dir)
    if args.all:
        reports = reproduce_all(workers=args.workers, report_dir=report_dir, progress_cb=_print_progress)
    else:
        reports = [reproduce(args.case, workers=args.workers, report_dir=report_dir)]
    table = pd.DataFrame(
        [{"case": r["case"], "status": r["status"], "passed": r["passed"], "checks": len(r["checks"])} for r in reports]
    )
    print(table.to_string(index=False))
    for report in reports:
        for check in report["checks"]:
            if not check["passed"]:
                print(
                    f"{report['case']}: {check['name']} measured {check['measured']:.10g}, expected {check['expected']}",
                    file=sys.stderr,
                )
        if report["status"] == "error":
            print(f"{report['case']}: {report['kind']}: {report['message']}", file=sys.stderr)
    return 0 if all(r["passed"] for r in reports) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Repeated games between an optimizer and a no-regret learner.")
    parser.add_argument("--log-level", default="INFO", help="Logging verbosity (DEBUG, INFO, WARNING, ERROR).")
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate = subparsers.add_parser("simulate", help="Play one match described by a JSON config.")
    simulate.add_argument("--config", required=True, help="MatchConfig JSON file.")
    simulate.add_argument("--out", help="Transcript CSV path (default output/transcripts/<config>.csv).")

    regret = subparsers.add_parser("regret", help="Audit a transcript under one regret notion.")
    regret.add_argument("--transcript", required=True, help="Transcript CSV.")
    regret.add_argument("--polytope", required=True, help="Polytope JSON, or a polytope game JSON.")
    measure = regret.add_mutually_exclusive_group(required=True)
    measure.add_argument("--notion", choices=NOTIONS)
    measure.add_argument(
        "--diagnostics",
        action="store_true",
        help="Per-context swap, linear, polytope and integral-contraction regret of a contextual transcript.",
    )
    regret.add_argument("--p", help="Context weights as a JSON list (contextual_external and --diagnostics).")
    regret.add_argument("--out", help="Report JSON path. Defaults to stdout.")

    solve = subparsers.add_parser("solve", help="Compute a benchmark value of a saved game.")
    solve.add_argument("--benchmark", required=True, choices=("stackelberg", "perconval", "corrval"))
    solve.add_argument("--game", required=True, help="Game JSON file.")
    solve.add_argument("--epsilon", type=float, default=0.0, help="CE slack for corrval.")
    solve.add_argument("--workers", type=int, default=1, help="Threads for per-vertex LPs.")
    solve.add_argument("--out", help="Solution JSON path. Defaults to stdout.")

    generate = subparsers.add_parser("generate", help="Write a named game as JSON.")
    generate.add_argument("--name", required=True, choices=sorted(GAMES))
    generate.add_argument("--params", help='Generator parameters as JSON, e.g. \'{"graph": "triangle"}\'.')
    generate.add_argument("--graph", help="Edge-list file for dominating_set: V on the first line, then 1-based `u v` pairs.")
    generate.add_argument("--out", help="Game JSON path (default output/games/<name>.json).")

    repro = subparsers.add_parser("reproduce", help="Run registered reproduction cases.")
    target = repro.add_mutually_exclusive_group(required=True)
    target.add_argument("--case", choices=list(CASES))
    target.add_argument("--all", action="store_true")
    repro.add_argument("--workers", type=int, default=1)
    repro.add_argument("--report-dir", default=str(REPORTS_DIR))

    return parser


COMMANDS = {
    "simulate": _cmd_simulate,
    "regret": _cmd_regret,
    "solve": _cmd_solve,
    "generate": _cmd_generate,
    "reproduce": _cmd_reproduce,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.INFO), format="%(levelname)s %(message)s")
    ensure_directories()
    try:
        return COMMANDS[args.command](args)
    except LabError as exc:
        print(f"{exc.kind}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
