"""Headless entry points: learn, eval, play, cluster, serve, export.

Exit codes: 0 on success, 1 on a domain error (missing file, schema problem),
2 on a usage error.  Every command is deterministic given its flags; anything
random takes an explicit --seed.  The eval and cluster reports write a figure
next to the delimited output unless --no-fig is given.  Set MM_LOG to a path
to append session events there.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import analysis, evaluation, persistence as P
from .errors import RulesmithError
from .facts import BUTTONS
from .learning import LearnerConfig, learn
from .runtime import run_trace
from .service import serve_socket, serve_stdio


def _load_project(path) -> P.Project:
    if not os.path.exists(path):
        raise RulesmithError(f"project file not found: {path}")
    return P.load_project(path)


def _load_engine(path):
    if not os.path.exists(path):
        raise RulesmithError(f"engine file not found: {path}")
    return P.load_engine(path)


def _project_config(project: P.Project, args) -> LearnerConfig:
    config = project.config
    if getattr(args, "theta", None) is not None:
        config = replace(config, theta=args.theta)
    if getattr(args, "max_iter", None) is not None:
        config = replace(config, max_iterations=args.max_iter)
    return config


def _cmd_learn(args) -> int:
    project = _load_project(args.project)
    config = _project_config(project, args)
    result = learn(list(project.frames), config)
    P.save_engine(result.engine, args.out)
    status = "converged" if result.converged else "not converged (closest engine kept)"
    print(f"learned {len(result.engine.rules)} rules from {args.project}: "
          f"{status}, total error {result.total_error:.6f}")
    return 0


def _cmd_eval(args) -> int:
    engine = _load_engine(args.engine)
    project = _load_project(args.reference)
    config = _project_config(project, args)
    report = evaluation.frame_error(engine, list(project.frames), config)
    evaluation.write_report_json(report, args.report)
    csv_path = Path(args.report).with_suffix(".csv")
    evaluation.write_report_csv(report, csv_path)
    outputs = [args.report, str(csv_path)]
    if not args.no_fig:
        from .figures import save_eval_figure

        fig_path = Path(args.report).with_suffix(".png")
        save_eval_figure(report, fig_path)
        outputs.append(str(fig_path))
    print(f"meanError={report.mean_error:.6f} baseline={report.baseline_mean_error:.6f} "
          f"beatBaseline={report.beat_baseline} -> {', '.join(outputs)}")
    return 0


def _cmd_play(args) -> int:
    engine = _load_engine(args.engine)
    project = _load_project(args.frame0)
    if not project.frames:
        raise RulesmithError(f"{args.frame0} has no frames to start from")
    with open(args.trace, "r", encoding="utf-8") as fh:
        try:
            trace = json.load(fh)
        except json.JSONDecodeError as exc:
            raise RulesmithError(f"{args.trace}: invalid JSON at line {exc.lineno}")
    if not isinstance(trace, list) or not all(isinstance(t, dict) for t in trace):
        raise RulesmithError(f"{args.trace}: expected a JSON array of button maps")
    for tick in trace:
        unknown = set(tick) - set(BUTTONS)
        if unknown:
            raise RulesmithError(f"{args.trace}: unknown buttons {sorted(unknown)}")
    from .facts import derive_velocities, universe_of

    derived = derive_velocities(list(project.frames), project.config.vmax)
    frames = run_trace(engine, derived[0], trace,
                       universe_of(list(project.frames)), project.config)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump([P.frame_to_json(f) for f in frames], fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"played {len(frames)} ticks -> {args.out}")
    return 0


def _cmd_cluster(args) -> int:
    engine_dir = Path(args.engines)
    if not engine_dir.is_dir():
        raise RulesmithError(f"not a directory: {args.engines}")
    paths = sorted(engine_dir.glob("*.engine.json"))
    if not paths:
        raise RulesmithError(f"no *.engine.json files under {args.engines}")
    rule_ids = []
    vectors = []
    for path in paths:
        engine = P.load_engine(path)
        for rule in engine.rules:
            rule_ids.append(f"{path.stem.replace('.engine', '')}:{rule.id}")
            vectors.append(analysis.encode_rule(rule))
    if args.k == "auto":
        k_max = min(args.k_max, len(vectors))
        if k_max < 2:
            raise RulesmithError(f"need at least 2 rules for --k auto (have {len(vectors)})")
        k, curve = analysis.elbow_select(vectors, k_max=k_max, seed=args.seed)
    else:
        try:
            k = int(args.k)
        except ValueError:
            raise RulesmithError(f"--k must be 'auto' or an integer, got {args.k!r}")
        curve = None
    model = analysis.fit_gmm(vectors, k, seed=args.seed)
    assignments = analysis.assign_clusters(model, vectors)
    analysis.write_cluster_csv(args.out, rule_ids, vectors, assignments)
    outputs = [args.out]
    if curve is not None and not args.no_fig:
        from .figures import save_elbow_figure

        fig_path = Path(args.out).with_suffix(".png")
        save_elbow_figure(curve, k, fig_path)
        outputs.append(str(fig_path))
    print(f"clustered {len(vectors)} rules from {len(paths)} engines into k={k} "
          f"-> {', '.join(outputs)}")
    return 0


def _cmd_serve(args) -> int:
    project = _load_project(args.project) if args.project else None
    event_log = os.environ.get("MM_LOG")
    if args.stdio:
        serve_stdio(project, auto_relearn=args.auto_relearn, event_log=event_log)
    else:
        print(f"listening on {args.socket}", file=sys.stderr)
        serve_socket(args.socket, project, auto_relearn=args.auto_relearn,
                     event_log=event_log)
    return 0


def _cmd_export(args) -> int:
    engine = _load_engine(args.engine)
    text = P.export_engine_text(engine)
    with open(args.text, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"wrote {len(engine.rules)} rules -> {args.text}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rulesmith",
        description="Learn grid-game rules from demonstrated frames; "
                    "run, evaluate, serve, and cluster them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="learn an engine from a project's frames")
    p.add_argument("--project", required=True, help="input project (.mmproj)")
    p.add_argument("--out", required=True, help="output engine (.engine.json)")
    p.add_argument("--theta", type=int, help="raw-distance acceptance threshold (default 0)")
    p.add_argument("--max-iter", type=int, help="search budget per failing transition (default 10)")
    p.set_defaults(func=_cmd_learn)

    p = sub.add_parser("eval", help="frame error of an engine against a reference project")
    p.add_argument("--engine", required=True, help="engine file (.engine.json)")
    p.add_argument("--reference", required=True, help="reference project (.mmproj)")
    p.add_argument("--report", required=True, help="output report (.json; .csv/.png siblings)")
    p.add_argument("--no-fig", action="store_true", help="skip the figure")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("play", help="replay an input trace through an engine")
    p.add_argument("--engine", required=True, help="engine file (.engine.json)")
    p.add_argument("--frame0", required=True, help="project whose frame 0 starts the session")
    p.add_argument("--trace", required=True, help="JSON array of button maps, one per tick")
    p.add_argument("--out", required=True, help="output frame sequence (JSON)")
    p.set_defaults(func=_cmd_play)

    p = sub.add_parser("cluster", help="encode rules as vectors and fit a Gaussian mixture")
    p.add_argument("--engines", required=True, help="directory of *.engine.json files")
    p.add_argument("--k", default="auto", help="cluster count, or 'auto' for the elbow method")
    p.add_argument("--k-max", type=int, default=12, help="largest k tried by the elbow method")
    p.add_argument("--seed", type=int, default=0, help="mixture seed")
    p.add_argument("--out", required=True, help="output CSV (one row per rule)")
    p.add_argument("--no-fig", action="store_true", help="skip the elbow figure")
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("serve", help="run the editor session service")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--socket", help="unix socket path to listen on")
    group.add_argument("--stdio", action="store_true", help="speak the protocol on stdin/stdout")
    p.add_argument("--project", help="project to preload (.mmproj)")
    p.add_argument("--auto-relearn", action="store_true",
                   help="relearn in the background after every frame edit")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("export", help="write an engine as a human-readable rule listing")
    p.add_argument("--engine", required=True, help="engine file (.engine.json)")
    p.add_argument("--text", required=True, help="output text path")
    p.set_defaults(func=_cmd_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RulesmithError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
