"""Command-line entry points for scripted experiments.

Every invocation resolves its options as flags > config file > built-in
defaults, takes a lock on the output directory, runs, and leaves behind a
manifest (command, effective config, input digests, output files, timing)
from which the run can be reproduced.

Exit codes: 0 success, 2 bad arguments, 3 bad data, 4 no valid grasp.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from filelock import FileLock

from . import grasping, protocol
from .errors import NoValidGraspError, PipelineError
from .features import describe_cloud, load_embeddings, render_views, save_features
from .geometry import load_cloud
from .learner import KnowledgeBase, load_kb, save_kb
from .projection import (
    DEFAULT_GRASP_BINS,
    DEFAULT_RECOGNITION_BINS,
    FIXED_SIZE,
    SCALE_INVARIANT,
    ViewSetup,
    write_view,
)
from .views import rank_views

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NO_GRASP = 4

_MODES = {"scale-invariant": SCALE_INVARIANT, "fixed": FIXED_SIZE}


# ---------------------------------------------------------------------------
# config, manifests, locking


def _read_config(path: Optional[str], command: str) -> Dict:
    """TOML or JSON key/value file; a table named after the command, when
    present, overrides the top level."""
    if path is None:
        return {}
    p = Path(path)
    if p.suffix == ".toml":
        doc = tomllib.loads(p.read_text())
    elif p.suffix == ".json":
        doc = json.loads(p.read_text())
    else:
        raise ValueError(f"config file must be .toml or .json, got {p.name}")
    flat = {k: v for k, v in doc.items() if not isinstance(v, dict)}
    flat.update(doc.get(command, {}))
    return flat


def _effective(defaults: Dict, config: Dict, args: argparse.Namespace) -> Dict:
    out = dict(defaults)
    for key in defaults:
        if key in config:
            out[key] = config[key]
    for key in defaults:
        flag = getattr(args, key, None)
        if flag is not None:
            out[key] = flag
    return out


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    if path.is_dir():
        for f in sorted(p for p in path.rglob("*") if p.is_file()):
            h.update(str(f.relative_to(path)).encode())
            h.update(f.read_bytes())
    else:
        h.update(path.read_bytes())
    return h.hexdigest()


class _Run:
    """Output-directory context: lock, collect outputs, emit the manifest."""

    def __init__(self, command: str, out_dir: str, cfg: Dict, inputs: List[str]):
        self.command = command
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.cfg = cfg
        self.inputs = [Path(p) for p in inputs]
        self.outputs: List[Path] = []
        self.extra: Dict = {}
        self._lock = FileLock(self.out / ".lock")
        self._t0 = 0.0

    def path(self, name: str) -> Path:
        p = self.out / name
        self.outputs.append(p)
        return p

    def __enter__(self) -> "_Run":
        self._lock.acquire()
        self._t0 = time.perf_counter()
        self._started = datetime.now(timezone.utc).isoformat()
        return self

    def __exit__(self, exc_type, exc, tb):
        try:
            manifest = {
                "command": self.command,
                "config": self.cfg,
                "seed": self.cfg.get("seed"),
                "inputs": {
                    str(p): _digest(p) for p in self.inputs if p.exists()
                },
                "outputs": [str(p) for p in self.outputs],
                "started": self._started,
                "elapsed_s": time.perf_counter() - self._t0,
                "status": "ok" if exc_type is None else f"error: {exc}",
                **self.extra,
            }
            (self.out / "manifest.json").write_text(
                json.dumps(manifest, indent=2) + "\n"
            )
        finally:
            self._lock.release()
        return False


# ---------------------------------------------------------------------------
# shared option plumbing


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="TOML or JSON config file")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--seed", type=int, help="random seed")


def _add_view_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--setup", choices=["orthographic", "orbit", "sphere"])
    sub.add_argument("--alpha", type=float, help="azimuth interval, degrees")
    sub.add_argument("--phi", type=float, help="orbit elevation, degrees")
    sub.add_argument("--beta", type=float, help="sphere elevation interval, degrees")
    sub.add_argument("--mode", choices=sorted(_MODES))
    sub.add_argument("--bins", type=int, help="bins per view side")
    sub.add_argument("--distance", type=float, help="camera distance, meters")


def _setup_from(cfg: Dict) -> ViewSetup:
    kind = cfg["setup"]
    if kind == "orthographic":
        return ViewSetup.orthographic()
    if kind == "orbit":
        if cfg.get("alpha") is None or cfg.get("phi") is None:
            raise ValueError("orbit setup needs --alpha and --phi")
        return ViewSetup.orbit(cfg["alpha"], cfg["phi"])
    if kind == "sphere":
        if cfg.get("alpha") is None or cfg.get("beta") is None:
            raise ValueError("sphere setup needs --alpha and --beta")
        return ViewSetup.sphere(cfg["alpha"], cfg["beta"])
    raise ValueError(f"unknown setup {kind!r}")


_VIEW_DEFAULTS = {
    "setup": "orthographic",
    "alpha": None,
    "phi": None,
    "beta": None,
    "mode": "scale-invariant",
    "bins": DEFAULT_RECOGNITION_BINS,
    "distance": 1.0,
    "seed": 0,
}


def _render(cloud_path: str, cfg: Dict):
    cloud = load_cloud(cloud_path)
    return render_views(
        cloud,
        _setup_from(cfg),
        bins=cfg["bins"],
        mode=_MODES[cfg["mode"]],
        distance=cfg["distance"],
    )


def _load_instances(paths: List[str], cfg: Dict) -> Dict[str, "object"]:
    """Cloud files become rendered descriptors, CSVs contribute every row."""
    out = {}
    for p in paths:
        path = Path(p)
        if path.suffix == ".csv":
            for fid, x in load_embeddings(path).items():
                out[f"{path.stem}#{fid}"] = x
        else:
            out[path.stem] = describe_cloud(
                load_cloud(path),
                _setup_from(cfg),
                bins=cfg["bins"],
                pooling=cfg["pooling"],
            )
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_project(args: argparse.Namespace) -> int:
    cfg = _effective(_VIEW_DEFAULTS, _read_config(args.config, "project"), args)
    with _Run("project", args.out or "out", cfg, [args.cloud]) as run:
        views = _render(args.cloud, cfg)
        for i, view in enumerate(views):
            write_view(view, run.path(f"view_{i:03d}.dview"))
        run.extra["view_count"] = len(views)
    print(f"wrote {len(views)} views")
    return EXIT_OK


def cmd_rank(args: argparse.Namespace) -> int:
    cfg = _effective(_VIEW_DEFAULTS, _read_config(args.config, "rank"), args)
    with _Run("rank", args.out or "out", cfg, [args.cloud]) as run:
        scores = rank_views(_render(args.cloud, cfg))
        with open(run.path("rank.csv"), "w") as fh:
            fh.write("view_index,entropy_bits\n")
            for s in scores:
                fh.write(f"{s.view_index},{s.entropy_bits:.9g}\n")
        run.extra["best_view"] = scores[0].view_index
    print(f"best view {scores[0].view_index} ({scores[0].entropy_bits:.3f} bits)")
    return EXIT_OK


_FEATURE_DEFAULTS = {**_VIEW_DEFAULTS, "pooling": "avg"}


def cmd_features(args: argparse.Namespace) -> int:
    cfg = _effective(_FEATURE_DEFAULTS, _read_config(args.config, "features"), args)
    with _Run("features", args.out or "out", cfg, list(args.clouds)) as run:
        feats = {
            Path(p).stem: describe_cloud(
                load_cloud(p), _setup_from(cfg), bins=cfg["bins"], pooling=cfg["pooling"]
            )
            for p in args.clouds
        }
        save_features(feats, run.path("features.csv"))
    print(f"wrote {len(feats)} descriptors")
    return EXIT_OK


_TEACH_DEFAULTS = {**_FEATURE_DEFAULTS, "smoothing": 0.01}


def cmd_teach(args: argparse.Namespace) -> int:
    cfg = _effective(_TEACH_DEFAULTS, _read_config(args.config, "teach"), args)
    kb_path = Path(args.kb)
    inputs = list(args.instances) + ([str(kb_path)] if kb_path.exists() else [])
    with _Run("teach", args.out or "out", cfg, inputs) as run:
        kb = load_kb(kb_path) if kb_path.exists() else KnowledgeBase(cfg["smoothing"])
        instances = _load_instances(args.instances, cfg)
        kb.teach(args.label, list(instances.values()))
        save_kb(kb, kb_path)
        run.outputs.append(kb_path)
        run.extra["categories"] = kb.labels
    print(f"taught {args.label!r} with {len(instances)} instances; N={kb.n_total}")
    return EXIT_OK


def cmd_classify(args: argparse.Namespace) -> int:
    cfg = _effective(_FEATURE_DEFAULTS, _read_config(args.config, "classify"), args)
    with _Run("classify", args.out or "out", cfg, [args.kb, args.instance]) as run:
        kb = load_kb(Path(args.kb))
        instances = _load_instances([args.instance], cfg)
        results = {
            iid: kb.classify(x) for iid, x in instances.items()
        }
        doc = {
            iid: {"label": p.label, "log_scores": p.log_scores}
            for iid, p in results.items()
        }
        run.path("classify.json").write_text(json.dumps(doc, indent=2) + "\n")
    for iid, p in results.items():
        print(f"{iid}: {p.label}")
    return EXIT_OK


_PROTOCOL_DEFAULTS = {
    "tau": 0.75,
    "window_factor": 3,
    "breakpoint": 100,
    "instances_per_teach": 3,
    "seed": 0,
}


def _parse_seeds(spec: str) -> List[int]:
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in spec.split(",")]


def cmd_protocol(args: argparse.Namespace) -> int:
    cfg = _effective(_PROTOCOL_DEFAULTS, _read_config(args.config, "protocol"), args)
    seeds = _parse_seeds(args.seeds)
    with _Run("protocol", args.out or "out", cfg, [args.dataset]) as run:
        data = protocol.load_dataset(args.dataset)
        reports = []
        for seed in seeds:
            pc = protocol.ProtocolConfig(
                tau=cfg["tau"],
                window_factor=cfg["window_factor"],
                breakpoint_iters=cfg["breakpoint"],
                instances_per_teach=cfg["instances_per_teach"],
                seed=seed,
            )
            report = protocol.run_experiment(pc, data)
            protocol.write_report(report, run.path(f"report_{seed}.json"))
            protocol.write_timeline_csv(report, run.path(f"timeline_{seed}.csv"))
            reports.append(report)
        summary = protocol.aggregate_runs(reports)
        with open(run.path("aggregate.csv"), "w") as fh:
            fh.write("metric,mean,std\n")
            for metric, stats in summary.items():
                fh.write(f"{metric},{stats['mean']:.9g},{stats['std']:.9g}\n")
        run.extra["runs"] = len(reports)
    for metric, stats in summary.items():
        print(f"{metric}: {stats['mean']:.4g} +- {stats['std']:.4g}")
    return EXIT_OK


_GRASP_DEFAULTS = {
    "budget": 64,
    "bins": DEFAULT_GRASP_BINS,
    "seed": 0,
    "table_height": None,
    "max_width": grasping.DEFAULT_MAX_WIDTH_M,
    "finger_thickness": grasping.DEFAULT_FINGER_THICKNESS_M,
    "finger_depth": grasping.DEFAULT_FINGER_DEPTH_M,
    "iters": 300,
}


def cmd_grasp(args: argparse.Namespace) -> int:
    cfg = _effective(_GRASP_DEFAULTS, _read_config(args.config, "grasp"), args)
    with _Run("grasp", args.out or "out", cfg, [args.cloud]) as run:
        grip = grasping.GripperGeometry(
            max_width_m=cfg["max_width"],
            finger_thickness_m=cfg["finger_thickness"],
            finger_depth_m=cfg["finger_depth"],
        )
        plan = grasping.plan_grasp(
            load_cloud(args.cloud),
            grip=grip,
            budget=cfg["budget"],
            seed=cfg["seed"],
            bins=cfg["bins"],
            schedule=grasping.AnnealSchedule(iters=cfg["iters"]),
            table_height=cfg["table_height"],
        )
        run.extra["selected_view"] = plan.view_index
        run.extra["entropies"] = list(plan.entropies)
        grasping.write_grasp_map(plan.grasp_map, run.path("grasp.gmap"))
        grasping.write_grasp_csv([plan.best], run.path("best_grasp.csv"))
        if not plan.collision_free:
            raise NoValidGraspError(
                "best grasp collides with the object or the table"
            )
    print(
        f"view {plan.view_index}: best grasp at {plan.best.center_px}, "
        f"quality {plan.best.quality:.3f}"
    )
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    cfg = _effective(
        {"host": "127.0.0.1", "port": 8234, "seed": 0, "objects": None},
        _read_config(args.config, "serve"),
        args,
    )
    app = create_app(objects_dir=cfg["objects"])
    uvicorn.run(app, host=cfg["host"], port=int(cfg["port"]), log_level="warning")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvgrasp",
        description="Multi-view depth projection, open-ended category "
        "learning, and antipodal grasp synthesis for point-cloud objects.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("project", help="render depth views of a cloud")
    p.add_argument("cloud")
    _add_view_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("rank", help="rank a cloud's views by entropy")
    p.add_argument("cloud")
    _add_view_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("features", help="compute pooled view descriptors")
    p.add_argument("clouds", nargs="+")
    p.add_argument("--pooling", choices=["avg", "max", "append"])
    _add_view_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("teach", help="add labelled instances to a knowledge base")
    p.add_argument("instances", nargs="+", help="cloud files or feature CSVs")
    p.add_argument("--label", required=True)
    p.add_argument("--kb", required=True, help="knowledge base JSON (created if absent)")
    p.add_argument("--smoothing", type=float)
    p.add_argument("--pooling", choices=["avg", "max", "append"])
    _add_view_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_teach)

    p = sub.add_parser("classify", help="classify an instance against a knowledge base")
    p.add_argument("instance", help="cloud file or feature CSV")
    p.add_argument("--kb", required=True)
    p.add_argument("--pooling", choices=["avg", "max", "append"])
    _add_view_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("protocol", help="run simulated-teacher experiments")
    p.add_argument("--dataset", required=True, help="directory, one subdir per category")
    p.add_argument("--seeds", default="1..10", help="e.g. 1..10 or 3,5,8")
    p.add_argument("--tau", type=float)
    p.add_argument("--window-factor", dest="window_factor", type=int)
    p.add_argument("--breakpoint", type=int)
    p.add_argument("--instances-per-teach", dest="instances_per_teach", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("grasp", help="synthesize a grasp for a cloud")
    p.add_argument("cloud")
    p.add_argument("--budget", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--iters", type=int, help="annealing iterations")
    p.add_argument("--table-height", dest="table_height", type=float)
    p.add_argument("--max-width", dest="max_width", type=float)
    p.add_argument("--finger-thickness", dest="finger_thickness", type=float)
    p.add_argument("--finger-depth", dest="finger_depth", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_grasp)

    p = sub.add_parser("serve", help="start the HTTP teaching service")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--objects", help="directory of cloud files to expose")
    _add_common(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except NoValidGraspError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_GRASP
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
