"""Command-line front end: one subcommand per pipeline.

Every run writes its outputs plus ``manifest.json`` (resolved config, code
version, output digests, wall time) into ``--out``.  ``gridmetric replay
manifest.json --out DIR`` reruns the recorded config.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from .grid import Rect

SUBCOMMANDS = ("pinwheel-build", "pinwheel-stretch", "highway-build", "highway-verify",
               "fpp-profile", "fpp-ball", "fpp-errlp", "mono-eps", "optimize")


class ConfigError(ValueError):
    pass


def code_version() -> str:
    """Package version plus a digest of the package sources."""
    try:
        from importlib.metadata import version
        v = version("artifact")
    except Exception:
        v = "0+unknown"
    h = hashlib.sha256()
    root = Path(__file__).parent
    for p in sorted(root.rglob("*.py")):
        h.update(p.relative_to(root).as_posix().encode())
        h.update(p.read_bytes())
    return f"{v}+{h.hexdigest()[:12]}"


def _window(text) -> Rect:
    """``N`` for ``[0, N-1]^2`` or ``x0,y0,x1,y1``."""
    parts = [int(t) for t in str(text).split(",")]
    if len(parts) == 1:
        return Rect(0, 0, parts[0] - 1, parts[0] - 1)
    if len(parts) == 4:
        return Rect(*parts)
    raise ConfigError(f"bad window {text!r}")


# --------------------------------------------------------------------------
# parser


def _add(p: argparse.ArgumentParser, suppress: bool, *names, default=None, **kw):
    if suppress:
        kw["default"] = argparse.SUPPRESS
    else:
        kw["default"] = default
    p.add_argument(*names, **kw)


def build_parser(suppress: bool = False) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gridmetric", description="Grid metrics approximating Euclidean distance.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        _add(p, suppress, "--out", default=".", help="output directory")
        _add(p, suppress, "--seed", type=int, default=0)
        _add(p, suppress, "--threads", type=int, default=1, help="cap on worker threads")
        _add(p, suppress, "--format", choices=["csv", "json"], default="csv")
        p.add_argument("--config", default=None if not suppress else argparse.SUPPRESS,
                       help="JSON file of option values; command-line flags win")

    p = sub.add_parser("pinwheel-build", help="tile a window, embed it, audit the embedding")
    common(p)
    _add(p, suppress, "--window", default="500")
    _add(p, suppress, "--scale", type=float, default=25.0)

    p = sub.add_parser("pinwheel-stretch", help="binned stretch of the embedded pinwheel weights")
    common(p)
    _add(p, suppress, "--window", default="500")
    _add(p, suppress, "--scale", type=float, default=25.0)
    _add(p, suppress, "--pairs", type=int, default=200)
    _add(p, suppress, "--seed-pairs", type=int, default=0)
    _add(p, suppress, "--bins", type=int, default=8)

    p = sub.add_parser("highway-build", help="segments of the highway construction")
    common(p)
    _add(p, suppress, "--n", type=int, default=10_000)

    p = sub.add_parser("highway-verify", help="exact lower-bound and additive-error checks")
    common(p)
    _add(p, suppress, "--n", type=int, default=10_000)
    _add(p, suppress, "--pairs", type=int, default=200)
    _add(p, suppress, "--max-sep", type=float, default=1000.0)
    _add(p, suppress, "--extent", type=int, default=0, help="ring tiling extent (0: finite build)")

    p = sub.add_parser("fpp-profile", help="directional time constants of an i.i.d. law")
    common(p)
    _add(p, suppress, "--dist", default="2pt:0.44273,0.41401,0.55727,4.75309")
    _add(p, suppress, "--n", type=int, default=2000)
    _add(p, suppress, "--trials", type=int, default=20)
    _add(p, suppress, "--angles", type=int, default=33)
    _add(p, suppress, "--margin", type=float, default=0.3)

    for name, helptext in (("fpp-ball", "frontier of an empirical distance ball"),
                           ("fpp-errlp", "L_p fit of an empirical ball")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        _add(p, suppress, "--dist", default="uniform:0,1")
        _add(p, suppress, "--radius", type=float, default=400.0, help="approximate Euclidean radius")

    p = sub.add_parser("mono-eps", help="eps* bisection and convexity of the monotone ball")
    common(p)
    _add(p, suppress, "--n", type=int, default=1000)
    _add(p, suppress, "--trials", type=int, default=10)
    _add(p, suppress, "--tol", type=float, default=0.005)
    _add(p, suppress, "--ball-n", type=float, default=0.0, help="monotone ball radius (0: skip)")

    p = sub.add_parser("optimize", help="local search over k-point laws")
    common(p)
    _add(p, suppress, "--k", type=int, default=2)
    _add(p, suppress, "--budget", type=int, default=6, help="outer iterations")
    _add(p, suppress, "--inner", type=int, default=6)
    _add(p, suppress, "--eval-n", type=int, default=300)
    _add(p, suppress, "--eval-trials", type=int, default=4)
    _add(p, suppress, "--eval-angles", type=int, default=9)
    _add(p, suppress, "--init", default="")

    p = sub.add_parser("replay", help="rerun the config recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    return ap


def resolve_config(argv) -> dict:
    """Defaults, then the ``--config`` file, then explicit flags."""
    args = build_parser().parse_args(argv)
    cfg = vars(args).copy()
    if cfg["command"] == "replay":
        return cfg
    explicit = vars(build_parser(suppress=True).parse_args(argv))
    path = cfg.pop("config", None)
    if path:
        try:
            with open(path) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        for k, v in file_cfg.items():
            key = k.replace("-", "_")
            if key not in cfg or key == "command":
                raise ConfigError(f"unknown config key {k!r} for {cfg['command']}")
            cfg[key] = v
    for k, v in explicit.items():
        cfg[k] = v
    cfg.pop("config", None)
    return cfg


# --------------------------------------------------------------------------
# runners; each returns the list of files it wrote


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serialisable: {type(x)}")


def run_pinwheel_build(cfg, out: Path):
    from .pinwheel import audit_embedding, build_pinwheel_graph, embed_into_grid, planarity_violations

    g = build_pinwheel_graph(_window(cfg["window"]), cfg["scale"])
    emb = embed_into_grid(g, strict=False)
    rep = audit_embedding(emb)
    rep["planarity_violations"] = len(planarity_violations(g))
    rep["triangles"] = len(g.triangles)
    rep["vertices"] = len(g.vertices)
    rep["edges"] = len(g.edges)
    g.to_json(out / "tiling.json")
    emb.to_json(out / "embedding.json")
    _write_json(out / "audit.json", rep)
    return ["tiling.json", "embedding.json", "audit.json"]


def run_pinwheel_stretch(cfg, out: Path):
    from .pinwheel import build_pinwheel_graph, embed_into_grid, measure_stretch, stretch_pairs
    from .pinwheel.stretch import default_bins

    g = build_pinwheel_graph(_window(cfg["window"]), cfg["scale"])
    emb = embed_into_grid(g)
    per = 20
    pairs = stretch_pairs(g.window, sources=max(1, math.ceil(cfg["pairs"] / per)), per_source=per,
                          seed=cfg["seed_pairs"])[:cfg["pairs"]]
    rep = measure_stretch(emb.weights, pairs, default_bins(pairs, cfg["bins"]))
    if cfg["format"] == "json":
        _write_json(out / "stretch.json", {"table": rep.table(), "inversions": rep.inversions(),
                                            "lower_bound_gap": rep.lower_bound_gap()})
        return ["stretch.json"]
    rep.to_csv(out / "stretch.csv")
    rep.pairs_to_csv(out / "stretch_pairs.csv")
    return ["stretch.csv", "stretch_pairs.csv"]


def run_highway_build(cfg, out: Path):
    from .highway import build_highways, collision_audit, same_line_gaps, separation_audit

    segs, _ = build_highways(cfg["n"])
    ratio, checked, _ = separation_audit(segs)
    files = []
    if cfg["format"] == "json":
        segs.to_json(out / "segments.json")
        files.append("segments.json")
    else:
        segs.to_csv(out / "segments.csv")
        files.append("segments.csv")
    _write_json(out / "audit.json", {"n": cfg["n"], "levels": list(segs.params.levels), "segments": len(segs),
                                     "collisions": collision_audit(segs), "separation_ratio": ratio,
                                     "pairs_checked": checked, "same_line_gap_ratio": same_line_gaps(segs)})
    return files + ["audit.json"]


def run_highway_verify(cfg, out: Path):
    from .highway import (LeveledSegments, build_highways, build_level_params, ring_tiling_weights,
                          sample_pairs, verify_guarantees)

    if cfg["extent"]:
        w = ring_tiling_weights(cfg["extent"])
        params = build_level_params(cfg["extent"])
        empty = LeveledSegments(params, w.window, [], [], [], [], [])
        pairs = sample_pairs(empty, w.window, cfg["pairs"], cfg["max_sep"], cfg["seed"])
    else:
        segs, w = build_highways(cfg["n"])
        params = segs.params
        pairs = sample_pairs(segs, w.window, cfg["pairs"], cfg["max_sep"], cfg["seed"])
    rep = verify_guarantees(w, pairs, params, strict=False)
    rep.to_csv(out / "verify.csv")
    _write_json(out / "summary.json", {"pairs": len(rep.rows), "violations": rep.violations,
                                       "fitted_constant": rep.fitted_constant()})
    return ["verify.csv", "summary.json"]


def run_fpp_profile(cfg, out: Path):
    from .distributions import parse_distribution
    from .percolation import directional_stretch

    prof = directional_stretch(parse_distribution(cfg["dist"]), cfg["n"], cfg["angles"], cfg["trials"],
                               cfg["seed"], cfg["margin"], workers=cfg["threads"])
    prof.to_csv(out / "profile.csv")
    _write_json(out / "summary.json", {"law": prof.law, "n": prof.n, "trials": prof.trials,
                                       "max_stretch": prof.max_stretch(), "mu0": prof.mu0(),
                                       "mu45": prof.mu45()})
    return ["profile.csv", "summary.json"]


def _ball(cfg):
    from .distributions import parse_distribution
    from .percolation import ball_threshold, empirical_ball

    law = parse_distribution(cfg["dist"])
    return empirical_ball(law, ball_threshold(law, cfg["radius"], cfg["seed"]), cfg["seed"])


def run_fpp_ball(cfg, out: Path):
    ball = _ball(cfg)
    ball.to_csv(out / "ball.csv")
    _write_json(out / "summary.json", {"threshold": ball.n, "u0": list(ball.u0),
                                       "frontier_points": len(ball.frontier), "anisotropy": ball.anisotropy()})
    return ["ball.csv", "summary.json"]


def run_fpp_errlp(cfg, out: Path):
    import csv

    from .percolation import err_scan, fit_p

    ball = _ball(cfg)
    ps = np.linspace(1.0, 3.0, 201)
    errs = err_scan(ball, ps)
    with open(out / "errlp.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p", "err"])
        for p, e in zip(ps.tolist(), errs.tolist()):
            w.writerow([repr(p), repr(e)])
    p_star, err = fit_p(ball)
    _write_json(out / "fit.json", {"p_star": p_star, "err": err, "threshold": ball.n, "u0": list(ball.u0)})
    return ["errlp.csv", "fit.json"]


def run_mono_eps(cfg, out: Path):
    from .percolation import find_eps_star, mono_ball_convexity

    res = find_eps_star(cfg["n"], cfg["trials"], cfg["seed"], cfg["tol"], workers=cfg["threads"])
    doc = {"eps_star": res.eps, "mu45": res.mu45,
           "history": [dict(lo=a, hi=b, eps=c, mu45=d) for a, b, c, d in res.history]}
    if cfg["ball_n"]:
        conv = mono_ball_convexity(res.eps, cfg["ball_n"], cfg["seed"])
        doc["convexity"] = {k: conv[k] for k in ("violation", "noise", "convex", "r0", "r45")}
    _write_json(out / "eps.json", doc)
    return ["eps.json"]


def run_optimize(cfg, out: Path):
    from .distributions import parse_distribution
    from .optimizer import SearchConfig, local_search

    sc = SearchConfig(k=cfg["k"], outer_iters=cfg["budget"], inner_iters=cfg["inner"], eval_n=cfg["eval_n"],
                      eval_trials=cfg["eval_trials"], eval_angles=cfg["eval_angles"], seed=cfg["seed"],
                      workers=cfg["threads"])
    init = parse_distribution(cfg["init"]) if cfg["init"] else None
    res = local_search(sc, init)
    res.to_csv(out / "history.csv")
    res.to_json(out / "best.json")
    return ["history.csv", "best.json"]


RUNNERS = {
    "pinwheel-build": run_pinwheel_build,
    "pinwheel-stretch": run_pinwheel_stretch,
    "highway-build": run_highway_build,
    "highway-verify": run_highway_verify,
    "fpp-profile": run_fpp_profile,
    "fpp-ball": run_fpp_ball,
    "fpp-errlp": run_fpp_errlp,
    "mono-eps": run_mono_eps,
    "optimize": run_optimize,
}


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def execute(cfg: dict) -> dict:
    """Run one resolved config; returns the manifest."""
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    files = RUNNERS[cfg["command"]](cfg, out)
    manifest = {
        "subcommand": cfg["command"],
        "config": {k: v for k, v in cfg.items() if k != "out"},
        "version": code_version(),
        "outputs": {f: _digest(out / f) for f in files},
        "wall_time_s": time.perf_counter() - t0,
    }
    _write_json(out / "manifest.json", manifest)
    return manifest


def _error_report(cfg, err, out):
    rep = {"error": type(err).__name__, "message": str(err),
           "subcommand": (cfg or {}).get("command")}
    text = json.dumps(rep, sort_keys=True)
    print(text, file=sys.stderr)
    if out:
        try:
            Path(out).mkdir(parents=True, exist_ok=True)
            (Path(out) / "error.json").write_text(text + "\n")
        except OSError:
            pass


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    cfg = None
    try:
        cfg = resolve_config(argv)   # argparse exits with code 2 on bad flags
        if cfg["command"] == "replay":
            with open(cfg["manifest"]) as fh:
                old = json.load(fh)
            new_cfg = dict(old["config"], out=cfg["out"])
            new_cfg["command"] = old["subcommand"]
            manifest = execute(new_cfg)
            same = manifest["outputs"] == old["outputs"]
            print(json.dumps({"replayed": old["subcommand"], "identical": same}))
            return 0 if same else 3
        if cfg["threads"] is not None and cfg["threads"] < 1:
            raise ConfigError("--threads must be >= 1")
        os.environ.setdefault("NUMBA_NUM_THREADS", str(cfg["threads"]))
        execute(cfg)
        return 0
    except SystemExit:
        raise
    except Exception as err:  # report, never a bare traceback
        _error_report(cfg, err, (cfg or {}).get("out"))
        return 1


if __name__ == "__main__":
    sys.exit(main())
