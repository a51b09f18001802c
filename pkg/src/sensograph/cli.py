"""Command-line interface.

Verbs: ``analyze``, ``stability``, ``render``, ``simulate``, ``validate``.
Every verb accepts ``--config FILE`` (JSON object keyed by option name);
flags given on the command line override the file.

Exit codes: 0 success, 1 invalid input data, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys
import tempfile

import numpy as np

from . import consensus, mfa, render, similarity, stability
from .errors import DomainError, ParseError, SchemaError, SensographError
from .panel import SHEET, generate_panel, jitter_duplicates, read_panel, read_products, \
    validate_panel, write_panel

log = logging.getLogger("sensograph")

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2


class InvalidInput(SensographError):
    """Input data failed validation."""


def _add_panel_args(p):
    p.add_argument("--input", required=True, help="panel CSV (assessor_id,sample_code,x_cm,y_cm)")
    p.add_argument("--products", help="file listing product codes, one per line")
    p.add_argument("--sheet", nargs=2, type=float, default=list(SHEET), metavar=("W", "H"),
                   help="sheet size in cm (default 60 40)")
    p.add_argument("--jitter", nargs="?", type=float, const=0.01, default=None, metavar="EPS",
                   help="break coincident positions with uniform noise in [-EPS, EPS] "
                        "(default EPS 0.01 cm)")


def _add_method_args(p, allow_mfa=True):
    choices = ["gabriel", "distances", "mfa"] if allow_mfa else ["gabriel", "distances"]
    p.add_argument("--method", required=True, choices=choices)
    p.add_argument("--p", type=float, default=similarity.DEFAULT_P,
                   help="tuning exponent for the distances method (default 2)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sensograph", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="consensus map, matrix, dendrogram and figures")
    a.add_argument("--config", help="JSON file with option defaults")
    _add_panel_args(a)
    _add_method_args(a)
    a.add_argument("--decile", type=int, default=10, help="show the top 10*k%% edges (1..10)")
    a.add_argument("--delta", type=float, default=consensus.DEFAULT_DELTA,
                   help="floor on Kamada-Kawai target distances")
    a.add_argument("--seed", type=int, default=0, help="layout seed (0 = deterministic start)")
    a.add_argument("--max-iter", type=int, default=10_000)
    a.add_argument("--tol", type=float, default=1e-4)
    a.add_argument("--groups", type=int, default=None,
                   help="number of framed groups (default: widest dendrogram gap)")
    a.add_argument("--dims", type=int, default=None, help="MFA dimensions to export")
    a.add_argument("--out", required=True, help="output directory")

    s = sub.add_parser("stability", help="bootstrap stability curve")
    s.add_argument("--config", help="JSON file with option defaults")
    _add_panel_args(s)
    _add_method_args(s)
    s.add_argument("--dims", type=int, default=2, help="MFA dimensions compared by RV")
    s.add_argument("--reps", type=int, default=100)
    s.add_argument("--grid-step", type=int, default=10)
    s.add_argument("--grid", help="explicit comma-separated panel sizes (n is appended)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threshold", type=float, default=0.95)
    s.add_argument("--dump-replicates", action="store_true")
    s.add_argument("--out", required=True, help="output directory")

    r = sub.add_parser("render", help="draw a figure from exported files")
    r.add_argument("--config", help="JSON file with option defaults")
    r.add_argument("--kind", required=True, choices=render.KINDS)
    r.add_argument("--matrix", help="global similarity matrix CSV")
    r.add_argument("--layout", help="configuration CSV (code,x,y)")
    r.add_argument("--curve", action="append", help="curve CSV (repeatable)")
    r.add_argument("--decile", type=int, default=10)
    r.add_argument("--groups", type=int, default=None)
    r.add_argument("--threshold", type=float, default=0.95)
    r.add_argument("--out", required=True, help="output SVG file")

    m = sub.add_parser("simulate", help="generate a synthetic panel around a true map")
    m.add_argument("--config", help="JSON file with option defaults")
    m.add_argument("--truth", required=True, help="CSV code,x,y in cm")
    m.add_argument("--noise-sd", type=float, required=True)
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--sheet", nargs=2, type=float, default=list(SHEET), metavar=("W", "H"))
    m.add_argument("--out", required=True, help="output panel CSV")

    v = sub.add_parser("validate", help="check a panel file")
    v.add_argument("--config", help="JSON file with option defaults")
    _add_panel_args(v)
    return parser


def _config_path(argv):
    for k, tok in enumerate(argv):
        if tok == "--config" and k + 1 < len(argv):
            return argv[k + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _parse(parser, argv):
    argv = list(sys.argv[1:] if argv is None else argv)
    path = _config_path(argv)
    command = next((tok for tok in argv if tok in COMMANDS), None)
    if path and command:
        try:
            with open(path, encoding="utf-8") as fh:
                defaults = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config file {path}: {exc}")
        if not isinstance(defaults, dict):
            parser.error("config file must hold a JSON object")
        sub = parser._subparsers._group_actions[0].choices[command]
        defaults = {k.replace("-", "_"): val for k, val in defaults.items()}
        actions = {a.dest: a for a in sub._actions}
        unknown = sorted(set(defaults) - set(actions) - {"config"})
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        defaults.pop("config", None)
        for dest in defaults:
            actions[dest].required = False
        sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _load_panel(args):
    products = read_products(args.products) if args.products else None
    panel = read_panel(args.input, sheet=tuple(args.sheet), products=products)
    if args.jitter is not None:
        panel = jitter_duplicates(panel, args.jitter, seed=0)
    report = validate_panel(panel)
    for w in report.warnings:
        log.warning("%s", w)
    if not report.accepted:
        raise InvalidInput("panel failed validation:\n" + "\n".join(str(e) for e in report.errors))
    return panel


class _Staging:
    """Write outputs into a scratch directory; move them into place only on success."""

    def __init__(self, out):
        self.out = out

    def __enter__(self):
        os.makedirs(self.out, exist_ok=True)
        self.tmp = tempfile.mkdtemp(prefix=".partial-", dir=self.out)
        return self

    def write(self, name, text):
        with open(os.path.join(self.tmp, name), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            for name in sorted(os.listdir(self.tmp)):
                os.replace(os.path.join(self.tmp, name), os.path.join(self.out, name))
        shutil.rmtree(self.tmp, ignore_errors=True)
        return False


def cmd_analyze(args) -> int:
    panel = _load_panel(args)
    summary = {"method": args.method, "n": panel.n, "q": panel.q,
               "products": list(panel.products)}
    with _Staging(args.out) as out:
        if args.method == "mfa":
            result = mfa.mfa_consensus(panel, args.dims)
            out.write("scores.csv", mfa.format_scores(result))
            out.write("eigenvalues.csv", mfa.format_eigenvalues(result))
            out.write("consensus.svg", render.render_consensus(result.scores))
            summary["explained_pct"] = [round(float(v), 6) for v in result.explained]
            summary["excluded_assessors"] = list(result.excluded)
        else:
            g = similarity.global_similarity(panel, args.method, args.p)
            settings = consensus.LayoutSettings(seed=args.seed, max_iterations=args.max_iter,
                                                gradient_tolerance=args.tol, delta=args.delta)
            layout, info = consensus.consensus_layout(g, settings, return_info=True)
            dend = consensus.hierarchical_cluster(g)
            k = args.groups or dend.largest_gap_clusters()
            groups = dend.cut(k)
            labels = g.labels
            out.write("global_matrix.csv", similarity.format_matrix(g))
            out.write("consensus.csv", consensus.format_configuration(layout))
            out.write("dendrogram.nwk", consensus.to_newick(dend, labels) + "\n")
            out.write("consensus.svg", render.render_consensus(
                layout, g, render.RenderSpec(decile=args.decile)))
            out.write("heatmap.svg", render.render_heatmap(
                g, dend, render.RenderSpec(kind="heatmap"), groups))
            out.write("dendrogram.svg", render.render_dendrogram(
                dend, labels, render.RenderSpec(kind="dendrogram")))
            i, j = np.unravel_index(np.argmax(np.triu(g.values, 1)), g.values.shape)
            summary.update({
                "p": g.p,
                "strongest_edge": [labels[i], labels[j], float(g.values[i, j])],
                "groups": [[labels[m] for m in grp] for grp in groups],
                "leaf_order": [labels[m] for m in dend.leaf_order],
                "layout_stress": info.stress,
                "layout_converged": info.converged,
            })
        out.write("summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _grid(args, n):
    if args.grid:
        grid = sorted({int(v) for v in args.grid.split(",") if v.strip()})
        grid = [m for m in grid if m < n] + [n]
        return tuple(grid)
    return stability.make_grid(n, args.grid_step)


def cmd_stability(args) -> int:
    panel = _load_panel(args)
    method = stability.Method(args.method, dims=args.dims, p=args.p)
    curve = stability.bootstrap_stability(panel, method, _grid(args, panel.n), args.reps,
                                          args.seed)
    with _Staging(args.out) as out:
        out.write("curve.csv", stability.format_curve(curve))
        out.write("stability.svg", render.render_stability(
            curve, render.RenderSpec(kind="stability", threshold=args.threshold)))
        if args.dump_replicates:
            out.write("replicates.csv", stability.format_replicates(curve))
    crossing = curve.crossing(args.threshold)
    log.info("%s: mean %s first reaches %.2f at m=%s", curve.method, method.coefficient,
             args.threshold, crossing)
    return EXIT_OK


def cmd_render(args) -> int:
    spec = render.RenderSpec(kind=args.kind, decile=args.decile, threshold=args.threshold)
    if args.kind == "stability":
        if not args.curve:
            raise DomainError("--curve is required for stability figures")
        text = render.render_stability([stability.read_curve(c) for c in args.curve], spec)
    elif args.kind == "consensus":
        if not args.layout:
            raise DomainError("--layout is required for consensus figures")
        config = consensus.read_configuration(args.layout)
        g = similarity.read_matrix(args.matrix) if args.matrix else None
        text = render.render_consensus(config, g, spec)
    else:
        if not args.matrix:
            raise DomainError("--matrix is required for heatmap and dendrogram figures")
        g = similarity.read_matrix(args.matrix)
        dend = consensus.hierarchical_cluster(g)
        if args.kind == "heatmap":
            groups = dend.cut(args.groups or dend.largest_gap_clusters())
            text = render.render_heatmap(g, dend, spec, groups)
        else:
            text = render.render_dendrogram(dend, g.labels, spec)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    truth = consensus.read_configuration(args.truth)
    panel = generate_panel(truth, args.noise_sd, args.n, args.seed, sheet=tuple(args.sheet))
    write_panel(panel, args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    products = read_products(args.products) if args.products else None
    panel = read_panel(args.input, sheet=tuple(args.sheet), products=products)
    if args.jitter is not None:
        panel = jitter_duplicates(panel, args.jitter, seed=0)
    report = validate_panel(panel)
    print(report.format())
    print(f"{panel.n} tablecloths, {panel.q} products, {len(report.errors)} errors, "
          f"{len(report.warnings)} warnings")
    return EXIT_OK if report.accepted else EXIT_INVALID


COMMANDS = {
    "analyze": cmd_analyze,
    "stability": cmd_stability,
    "render": cmd_render,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _parse(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (InvalidInput, ParseError, SchemaError) as exc:
        print(f"sensograph: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"sensograph: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except DomainError as exc:
        print(f"sensograph: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
