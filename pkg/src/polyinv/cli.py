"""Batch command-line front end.

Exit status: 0 on success, 1 when ``--expect-nonempty`` was given and the
result is empty, 2 on bad input.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .errors import PolyinvError
from .geometry import Box, PolyUnion, poly_intersect, poly_is_empty, vertices_2d
from .intervals import DEFAULT_MAX_ITER, forward_backward_contract, preimage_overapprox_box
from .network import classify, eval_network, load_network
from .preimage import BREADTH_FIRST, DEPTH_FIRST, preimage_network, preimage_underapprox
from .propagate import network_image
from .serialization import (
    dumps,
    parse_box_arg,
    parse_set_arg,
    union_to_json,
)

log = logging.getLogger("polyinv")

EXIT_OK, EXIT_EMPTY, EXIT_INPUT = 0, 1, 2


class InputError(PolyinvError):
    pass


def _configure_logging() -> None:
    level = os.environ.get("POLYINV_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(
        level=levels.get(level, logging.ERROR), stream=sys.stderr, format="polyinv: %(levelname)s: %(message)s"
    )


def _map_parts(fn, parts, threads: int):
    """Apply ``fn`` to every part, optionally on a thread pool; order is preserved."""
    if threads > 1 and len(parts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, parts))
    return [fn(p) for p in parts]


def _clip(U: PolyUnion, box: Box | None) -> PolyUnion:
    if box is None:
        return U
    if box.dim != U.dim:
        raise InputError(f"clip box has dimension {box.dim}, set has {U.dim}")
    B = box.to_polyhedron()
    clipped = [poly_intersect(p, B) for p in U]
    return PolyUnion([p for p in clipped if not poly_is_empty(p)], U.dim)


def _write(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _cmd_eval(args, net) -> int:
    points = []
    for spec in args.point or []:
        try:
            points.append([float(v) for v in spec.split(",")])
        except ValueError:
            raise InputError(f"cannot parse point {spec!r}") from None
    if args.sample:
        if not args.in_box:
            raise InputError("--sample needs --in-box")
        box = parse_box_arg(args.in_box)
        if not box.is_bounded() or box.dim != net.input_dim:
            raise InputError("--in-box must be a bounded box matching the network input")
        rng = np.random.default_rng(args.seed)
        points.extend(rng.uniform(box.lo, box.hi, size=(args.sample, box.dim)).tolist())
    if not points:
        raise InputError("eval needs --point or --sample")
    rows = []
    for x in points:
        if len(x) != net.input_dim:
            raise InputError(f"point {x} has length {len(x)}, network expects {net.input_dim}")
        y = eval_network(net, np.array(x))
        row = {"input": x, "output": y.tolist()}
        if net.output_dim >= 2:
            row["class"] = classify(net, np.array(x)) + 1
        rows.append(row)
    _write(dumps({"points": rows}, indent=2), args.output)
    return EXIT_OK


def _emit_union(U: PolyUnion, args) -> int:
    _write(dumps(union_to_json(U), indent=2), args.output)
    log.info("result has %d part(s)", len(U))
    if getattr(args, "expect_nonempty", False) and len(U) == 0:
        return EXIT_EMPTY
    return EXIT_OK


def _cmd_image(args, net) -> int:
    X = parse_set_arg(args.set, net.input_dim)
    if X.dim != net.input_dim:
        raise InputError(f"input set has dimension {X.dim}, network expects {net.input_dim}")
    images = _map_parts(lambda p: network_image(net, p), list(X), args.threads)
    U = PolyUnion([p for part in images for p in part], net.output_dim)
    return _emit_union(_clip(U, _clip_box(args)), args)


def _output_set(args, net) -> PolyUnion:
    Z = parse_set_arg(args.set, net.output_dim)
    if Z.dim != net.output_dim:
        raise InputError(f"output set has dimension {Z.dim}, network produces {net.output_dim}")
    return Z


def _clip_box(args) -> Box | None:
    return parse_box_arg(args.clip) if getattr(args, "clip", None) else None


def _cmd_preimage(args, net) -> int:
    Z = _output_set(args, net)
    results = _map_parts(lambda p: preimage_network(p, net), list(Z), args.threads)
    U = PolyUnion([p for part in results for p in part], net.input_dim)
    return _emit_union(_clip(U, _clip_box(args)), args)


def _cmd_preimage_under(args, net) -> int:
    Z = _output_set(args, net)
    P = preimage_underapprox(Z, net, args.strategy)
    U = PolyUnion([] if poly_is_empty(P) else [P], net.input_dim)
    return _emit_union(_clip(U, _clip_box(args)), args)


def _cmd_preimage_box(args, net) -> int:
    Z = _output_set(args, net)
    return _emit_union(_clip(preimage_overapprox_box(Z, net), _clip_box(args)), args)


def _cmd_contract(args, net) -> int:
    X = parse_box_arg(args.in_box)
    Y = parse_box_arg(args.out_box)
    if X.dim != net.input_dim or Y.dim != net.output_dim:
        raise InputError("--in-box/--out-box dimensions do not match the network")
    _, _, trace = forward_backward_contract(net, X, Y, args.max_iter)
    log.info("contractor stopped after %d iteration(s)", len(trace) - 1)
    _write(dumps(trace.to_json_obj(), indent=2), args.output)
    if args.expect_nonempty and trace.is_empty():
        return EXIT_EMPTY
    return EXIT_OK


def format_polygons(polygons: list[list[np.ndarray]]) -> str:
    blocks = ["\n".join(f"{dumps(float(p[0]))} {dumps(float(p[1]))}" for p in poly) for poly in polygons]
    return "\n\n".join(blocks)


def _cmd_plot_data(args, net=None) -> int:
    U = parse_set_arg(args.set)
    if U.dim != 2:
        raise InputError("plot-data needs a 2-dimensional set")
    U = _clip(U, _clip_box(args))
    polygons = [vertices_2d(p) for p in U]
    _write(format_polygons(polygons), args.output)
    return EXIT_OK


COMMANDS = {
    "eval": _cmd_eval,
    "image": _cmd_image,
    "preimage": _cmd_preimage,
    "preimage-under": _cmd_preimage_under,
    "preimage-box": _cmd_preimage_box,
    "contract": _cmd_contract,
    "plot-data": _cmd_plot_data,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyinv", description="Exact images and preimages of polyhedra under piecewise-affine networks."
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", help="write the result here instead of stdout")
    common.add_argument("--seed", type=int, default=0, help="seed for sampling options (default 0)")
    common.add_argument("--threads", type=int, default=1, help="worker threads over input parts")
    common.add_argument("--expect-nonempty", action="store_true", help="exit 1 if the result is empty")

    with_net = argparse.ArgumentParser(add_help=False, parents=[common])
    with_net.add_argument("--network", required=True, help="network JSON file or bundled fixture name")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[with_net], help="evaluate the network on points")
    p.add_argument("--point", action="append", help="comma-separated input point (repeatable)")
    p.add_argument("--sample", type=int, default=0, help="number of uniform samples from --in-box")
    p.add_argument("--in-box", help="box to sample from, e.g. [0,1]x[0,1]")

    for name, helptext in (
        ("image", "forward image of an input set"),
        ("preimage", "exact preimage of an output set"),
        ("preimage-under", "one polyhedron inside the preimage"),
        ("preimage-box", "box over-approximation of the preimage"),
    ):
        p = sub.add_parser(name, parents=[with_net], help=helptext)
        p.add_argument("--set", required=True, help="set file, JSON, box like [0,1]x[0,1], or {y1<=y2}")
        p.add_argument("--clip", help="intersect every result part with this box")
        if name == "preimage-under":
            p.add_argument("--strategy", choices=[DEPTH_FIRST, BREADTH_FIRST], default=DEPTH_FIRST)

    p = sub.add_parser("contract", parents=[with_net], help="forward-backward interval contractor")
    p.add_argument("--in-box", required=True)
    p.add_argument("--out-box", required=True)
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)

    p = sub.add_parser("plot-data", parents=[common], help="vertex lists of a 2-D set for plotting")
    p.add_argument("--set", required=True, help="set file (e.g. preimage output)")
    p.add_argument("--clip", help="clip box, required for unbounded parts")
    return parser


def run(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        if args.threads < 1:
            raise InputError("--threads must be at least 1")
        if getattr(args, "max_iter", 1) < 1:
            raise InputError("--max-iter must be at least 1")
        net = load_network(args.network) if hasattr(args, "network") else None
        return COMMANDS[args.command](args, net)
    except (PolyinvError, ValueError, OSError) as exc:
        print(f"polyinv: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
