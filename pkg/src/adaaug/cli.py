"""Command line surface.

Subcommands: `apply` (augment PNG files, optionally into a tiled grid),
`controller-sim` (replay logged minibatch stats through the strength
controller), `leakcheck` (invertibility report for a group mixture), and
`gradcheck` (finite-difference validation of the pipeline gradient).

Exit codes: 0 success (leakcheck: invertible), 2 I/O or data error,
3 leak detected, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import leakage
from .controller import ControllerState, OverfitStats, update
from .imagefile import load_png, save_png, tile_grid
from .pipeline import (CATEGORIES, PipelineConfig, augment, augment_replay,
                       augment_vjp)

EXIT_OK = 0
EXIT_DATA = 2
EXIT_LEAK = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


class UsageError(ValueError):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="adaaug",
                     description="Adaptive discriminator augmentation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_apply = sub.add_parser("apply", help="augment PNG images")
    p_apply.add_argument("inputs", nargs="+", help="input PNG files")
    p_apply.add_argument("--config", help="pipeline config JSON file")
    p_apply.add_argument("--p", type=float, default=None)
    p_apply.add_argument("--seed", type=int, default=None)
    p_apply.add_argument("--categories",
                         help=f"comma list from {','.join(CATEGORIES)}")
    p_apply.add_argument("--out-dir", default=".")
    p_apply.add_argument("--grid", help="NxM: tile that many draws of the first input")
    p_apply.add_argument("--clamp", action="store_true",
                         help="clamp outputs to [-1, 1] before writing")

    p_sim = sub.add_parser("controller-sim", help="replay stats through the controller")
    p_sim.add_argument("stats", help="JSON Lines file, one minibatch per line")
    p_sim.add_argument("--heuristic", choices=("rt", "rv"), default="rt")
    p_sim.add_argument("--target", type=float, default=0.6)
    p_sim.add_argument("--ramp-images", type=int, default=500_000)
    p_sim.add_argument("--window", type=int, default=4)
    p_sim.add_argument("--out", default="-", help="trajectory CSV path (- for stdout)")

    p_leak = sub.add_parser("leakcheck", help="invertibility report for a mixture")
    p_leak.add_argument("--group", required=True,
                        help="ZN (e.g. Z4) or 'line' for integer translations")
    p_leak.add_argument("--probs", help="comma-separated probabilities, identity first")
    p_leak.add_argument("--gated", type=float,
                        help="uniform mixture applied with this probability")
    p_leak.add_argument("--states", type=int, default=None,
                        help="state-space size for the explicit operator")
    p_leak.add_argument("--tol", type=float, default=leakage.DEFAULT_TOL)
    p_leak.add_argument("--report", help="write the JSON report here")

    p_grad = sub.add_parser("gradcheck", help="gradient check against finite differences")
    p_grad.add_argument("--p", type=float, default=0.8)
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.add_argument("--size", default="32x32", help="HxW")
    p_grad.add_argument("--samples", type=int, default=100)
    p_grad.add_argument("--categories", default=None)
    return parser


def _parse_categories(text: str) -> dict[str, bool]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    unknown = set(names) - set(CATEGORIES)
    if unknown:
        raise UsageError(f"unknown categories: {sorted(unknown)}")
    return {c: c in names for c in CATEGORIES}


def _apply_config(args) -> PipelineConfig:
    if args.config:
        try:
            cfg = PipelineConfig.from_json(Path(args.config).read_text())
        except OSError as e:
            raise IOError(f"cannot read config: {e}") from e
    else:
        cfg = PipelineConfig()
    if args.categories is not None:
        for name, on in _parse_categories(args.categories).items():
            setattr(cfg, name, on)
    if args.p is not None:
        cfg = PipelineConfig(**{**cfg.__dict__, "p": args.p})
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def cmd_apply(args) -> int:
    try:
        cfg = _apply_config(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.grid:
        try:
            rows, cols = (int(t) for t in args.grid.lower().split("x"))
        except ValueError:
            print(f"error: --grid must look like 4x4, got {args.grid!r}",
                  file=sys.stderr)
            return EXIT_USAGE
        try:
            img = load_png(args.inputs[0])
        except OSError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_DATA
        batch = np.repeat(img[None], rows * cols, axis=0)
        out, records = augment(batch, cfg, image_index_base=0)
        if args.clamp:
            out = np.clip(out, -1.0, 1.0)
        grid = tile_grid(list(out), rows, cols)
        stem = Path(args.inputs[0]).stem
        save_png(out_dir / f"{stem}_grid.png", grid)
        recs = [r.to_dict() for r in records]
        (out_dir / f"{stem}_grid_records.json").write_text(
            json.dumps(recs, indent=2))
        print(f"wrote {stem}_grid.png with {rows * cols} draws")
        return EXIT_OK

    index = 0
    for path in args.inputs:
        try:
            img = load_png(path)
        except OSError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_DATA
        out, records = augment(img[None], cfg, image_index_base=index)
        if args.clamp:
            out = np.clip(out, -1.0, 1.0)
        stem = Path(path).stem
        save_png(out_dir / f"{stem}_aug.png", out[0])
        (out_dir / f"{stem}_aug_records.json").write_text(
            json.dumps(records[0].to_dict(), indent=2))
        index += 1
    print(f"augmented {index} image(s) into {out_dir}")
    return EXIT_OK


def cmd_controller_sim(args) -> int:
    state = ControllerState(heuristic=args.heuristic, target=args.target,
                            window=args.window,
                            step_per_image=1.0 / args.ramp_images)
    rows = []
    try:
        lines = Path(args.stats).read_text().splitlines()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            stats = OverfitStats(d_train=doc["d_train"],
                                 d_generated=doc.get("d_gen", []),
                                 d_validation=doc.get("d_val"))
            batch = int(doc["batch"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            print(f"error: malformed stats line {lineno}: {e}", file=sys.stderr)
            return EXIT_DATA
        try:
            state = update(state, stats, batch)
        except ValueError as e:
            print(f"error: stats line {lineno}: {e}", file=sys.stderr)
            return EXIT_DATA
        value = state.last_adjustment
        if value is None:
            value = state.running_heuristic()
        rows.append((len(rows), state.images_seen,
                     "" if value is None else f"{value:.6f}", f"{state.p:.8f}"))

    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    try:
        writer = csv.writer(out)
        writer.writerow(["minibatch_index", "images_seen", "heuristic_value", "p"])
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_leakcheck(args) -> int:
    group = args.group.strip().lower()
    try:
        if group == "line":
            order = "integer-line"
        elif group.startswith("z") and group[1:].isdigit():
            order = int(group[1:])
        else:
            raise UsageError(f"--group must be ZN or line, got {args.group!r}")
        if (args.probs is None) == (args.gated is None):
            raise UsageError("exactly one of --probs or --gated is required")
        if args.gated is not None:
            if order == "integer-line":
                raise UsageError("--gated applies to cyclic groups only")
            spec = leakage.gated_uniform_mixture(order, args.gated)
        else:
            probs = tuple(float(t) for t in args.probs.split(","))
            spec = leakage.MixtureSpec(group_order=order, probs=probs)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    verdict = leakage.dft_zero_check(spec, tol=args.tol)
    zeros = leakage.spectrum_zero_count(spec, tol=args.tol)
    states = args.states
    witness = None
    if states is None and isinstance(order, int):
        states = order
    if states is not None:
        if isinstance(order, int):
            action = leakage.cyclic_shift_action(order, states)
            op = leakage.build_group_operator(spec, states, action)
        else:
            op = leakage.build_group_operator(spec, states, action=None)
        op_verdict = leakage.null_space_witness(op, tol=args.tol)
        witness = op_verdict.witness

    doc = verdict.to_dict(spec={"group": str(spec.group_order),
                                "probs": list(spec.probs)})
    doc["witness"] = None if witness is None else [float(x) for x in witness]
    doc["spectrum_zeros"] = zeros
    text = json.dumps(doc, indent=2)
    if args.report:
        Path(args.report).write_text(text)
    print(text)
    return EXIT_OK if verdict.invertible else EXIT_LEAK


def cmd_gradcheck(args) -> int:
    try:
        h, w = (int(t) for t in args.size.lower().split("x"))
    except ValueError:
        print(f"error: --size must look like 32x32, got {args.size!r}",
              file=sys.stderr)
        return EXIT_USAGE
    cfg = PipelineConfig(p=args.p, seed=args.seed)
    if args.categories is not None:
        try:
            for name, on in _parse_categories(args.categories).items():
                setattr(cfg, name, on)
        except UsageError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_USAGE
    err = gradient_check(cfg, h, w, samples=args.samples, seed=args.seed)
    status = "PASS" if err <= 1e-3 else "FAIL"
    print(f"max relative error {err:.3e} [{status}]")
    return EXIT_OK if err <= 1e-3 else 1


def gradient_check(cfg: PipelineConfig, h: int, w: int, samples: int = 100,
                   seed: int = 0, step: float = 1e-3) -> float:
    """Max relative error of augment_vjp against central finite differences."""
    gen = np.random.default_rng(seed)
    batch = gen.uniform(-1.0, 1.0, size=(2, 3, h, w))
    _, records = augment(batch, cfg)
    upstream = gen.standard_normal(batch.shape)
    grad = augment_vjp(batch, records, cfg, upstream)

    worst = 0.0
    floor = 1e-6
    for _ in range(samples):
        b = int(gen.integers(0, batch.shape[0]))
        c = int(gen.integers(0, 3))
        r = int(gen.integers(1, h - 1))
        q = int(gen.integers(1, w - 1))
        bumped = batch.copy()
        bumped[b, c, r, q] += step
        lo = batch.copy()
        lo[b, c, r, q] -= step
        fd = (np.sum(augment_replay(bumped, records, cfg) * upstream)
              - np.sum(augment_replay(lo, records, cfg) * upstream)) / (2 * step)
        rel = abs(grad[b, c, r, q] - fd) / max(abs(fd), floor)
        worst = max(worst, rel)
    return worst


_COMMANDS = {
    "apply": cmd_apply,
    "controller-sim": cmd_controller_sim,
    "leakcheck": cmd_leakcheck,
    "gradcheck": cmd_gradcheck,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
