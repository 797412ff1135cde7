"""Command line interface.

Exit codes: 0 success, 2 usage error, 3 corrupt or malformed data,
4 partial batch failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .bench import CSV_COLUMNS, load_containers, run_bench
from .codec import EncodedImage, decode_frame, encode_frame
from .core import (BitstreamError, CodecConfig, RandomPerturbation, Standard, ZeroResidual,
                   parse_strategy)
from .featmap import render_mode_map, render_partition_map
from .imageio import ImageFormatError, read_image, write_pgm
from .metrics import (AnnotationError, format_psnr, gradient_correlation, mean_average_precision,
                      psnr, read_class_names, read_detections, read_ground_truth)
from .perturb import RpSeries, generate_rp_series

log = logging.getLogger("rpcodec")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PARTIAL = 0, 2, 3, 4

# decode-time figures measured with the HM reference decoder on an i9-9900X
REFERENCE_MS = {"standard": 36.25, "perturb": 23.33}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def _qp(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"qp must be an integer, got {text!r}") from None
    if not 0 <= v <= 51:
        raise argparse.ArgumentTypeError(f"qp must be in [0, 51], got {v}")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _float_list(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _sigma_label(sigma: float) -> str:
    return f"{sigma:g}".replace(".", "p")


# ---------------------------------------------------------------------------
# encode / decode

def _read_input(path) -> "Frame":
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"cannot read {path}")
    try:
        return read_image(path)
    except ImageFormatError as e:
        if "unsupported image format" in str(e):
            raise UsageError(str(e)) from None
        raise DataError(str(e)) from None
    except ValueError as e:
        raise DataError(f"{path}: {e}") from None


def _read_container(path) -> EncodedImage:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"cannot read {path}")
    try:
        return EncodedImage.from_bytes(path.read_bytes())
    except BitstreamError as e:
        raise DataError(f"{path}: {e}") from None


def cmd_encode(args) -> int:
    frame = _read_input(args.input)
    cfg = CodecConfig(qp=args.qp, loop_filter_enabled=not args.no_loop_filter)
    result = encode_frame(frame, cfg)
    Path(args.output).write_bytes(result.encoded.to_bytes())
    s = result.stats
    print(f"{args.output}: {frame.width}x{frame.height} qp={cfg.qp} bytes={s['bytes']} "
          f"bpp={s['bpp']:.4f} cus={s['cus']}")
    return EXIT_OK


def _strategy_from_args(args):
    try:
        return parse_strategy(args.strategy, sigma=args.sigma, seed=args.seed)
    except ValueError as e:
        raise UsageError(str(e)) from None


def cmd_decode(args) -> int:
    strategy = _strategy_from_args(args)
    enc = _read_container(args.input)
    rp = None
    if isinstance(strategy, RandomPerturbation):
        if args.rp_file:
            try:
                rp = RpSeries.load(args.rp_file, sigma=args.sigma, seed=args.seed)
            except OSError as e:
                raise UsageError(str(e)) from None
            except ValueError as e:
                raise DataError(str(e)) from None
        else:
            try:
                rp = generate_rp_series(args.sigma, args.seed)
            except ValueError as e:
                raise UsageError(str(e)) from None
    try:
        result = decode_frame(enc, strategy, rp)
    except BitstreamError as e:
        raise DataError(f"{args.input}: {e}") from None
    write_pgm(args.output, result.frame)
    log.debug("decoded %s: %s", args.input, result.timings.as_ms())
    if args.timing_out:
        perturb = isinstance(strategy, RandomPerturbation)
        report = dict(result.timings.as_ms(), strategy=args.strategy,
                      sigma=args.sigma if perturb else None,
                      seed=args.seed if perturb else None)
        Path(args.timing_out).write_text(json.dumps(report, indent=2) + "\n")
    return EXIT_OK


def cmd_series(args) -> int:
    try:
        rp = generate_rp_series(args.sigma, args.seed)
    except ValueError as e:
        raise UsageError(str(e)) from None
    rp.dump(args.output)
    print(f"{args.output}: sigma={rp.sigma:g} seed={rp.seed} mean={rp.achieved_mean:.4f} "
          f"std={rp.achieved_std:.4f} attempts={rp.attempts}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench

def _write_csv(path_or_none, rows, columns):
    fh = open(path_or_none, "w", newline="") if path_or_none else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.4f}" if isinstance(v, float) else v) for k, v in r.items()})
    finally:
        if path_or_none:
            fh.close()


def cmd_bench(args) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        raise UsageError(f"{directory} is not a directory")
    try:
        containers = load_containers(directory)
    except BitstreamError as e:
        raise DataError(str(e)) from None
    if not containers:
        raise UsageError(f"no .hvs containers in {directory}")
    strategies = []
    for name in args.strategies.split(","):
        try:
            strategies.append((name.strip(), parse_strategy(name, args.sigma, args.seed)))
        except ValueError as e:
            raise UsageError(str(e)) from None
    rows, summary = run_bench(containers, strategies, args.repeats, args.warmup)
    _write_csv(args.out, rows, CSV_COLUMNS)
    if args.out:
        from .report import plot_stage_timings
        fig = args.figure or str(Path(args.out).with_suffix(".png"))
        plot_stage_timings(rows, fig)
    for label, st in summary.items():
        ref = REFERENCE_MS.get(label)
        ref_txt = f" (HM reference {ref:.2f} ms)" if ref else ""
        print(f"# {label}: mean wall {st.avg_ms:.2f} ms{ref_txt}", file=sys.stderr)
    if "standard" in summary and "perturb" in summary:
        red = 100 * (1 - summary["perturb"].avg_ms / summary["standard"].avg_ms)
        ref_red = 100 * (1 - REFERENCE_MS["perturb"] / REFERENCE_MS["standard"])
        print(f"# perturb vs standard: {red:.1f}% less wall time (HM reference {ref_red:.1f}%)",
              file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval

def _annotation_files(directory):
    return {p.name: p for p in sorted(Path(directory).iterdir())
            if p.is_file() and not p.name.startswith(".") and p.suffix == ".txt"}


def evaluate_directories(gt_dir, det_dir, iou_thr=0.5, class_names=None):
    gts = _annotation_files(gt_dir)
    dets = _annotation_files(det_dir)
    if not gts:
        raise DataError(f"no ground-truth files in {gt_dir}")
    orphans = sorted(set(dets) - set(gts))
    if orphans:
        raise DataError(f"detection file {orphans[0]} has no ground-truth counterpart")
    # an empty detection directory means the detector found nothing
    missing = sorted(set(gts) - set(dets))
    if dets and missing:
        raise DataError(f"ground-truth file {missing[0]} has no detection counterpart")
    images = []
    for name, gpath in gts.items():
        d = read_detections(dets[name]) if name in dets else []
        images.append((d, read_ground_truth(gpath)))
    return mean_average_precision(images, iou_thr, class_names)


def cmd_eval(args) -> int:
    for d in (args.gt_dir, args.det_dir):
        if not Path(d).is_dir():
            raise UsageError(f"{d} is not a directory")
    if not 0.0 < args.iou <= 1.0:
        raise UsageError("--iou must be in (0, 1]")
    try:
        names = read_class_names(args.classes) if args.classes else {}
        result = evaluate_directories(args.gt_dir, args.det_dir, args.iou, names)
    except AnnotationError as e:
        raise DataError(str(e)) from None
    except ValueError as e:
        raise DataError(str(e)) from None
    print(f"{'class':<14}{'AP@' + format(args.iou, '.2f'):>10}")
    for c in sorted(result.ap):
        print(f"{names.get(c, str(c)):<14}{100 * result.ap[c]:>9.2f}%")
    print(f"{'mAP':<14}{100 * result.mAP:>9.2f}%")
    print(f"precision {result.precision:.4f}  recall {result.recall:.4f}  f1 {result.f1:.4f}  "
          f"mean IoU (matched) {result.mean_iou:.4f}")
    out = Path(args.out)
    payload = dict(result.to_dict(), iou_threshold=args.iou)
    out.write_text(json.dumps(payload, indent=2) + "\n")
    from .report import plot_ap
    plot_ap(result, args.figure or out.with_suffix(".png"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# batch

def process_image(path, out_root, qp, sigmas, seed, loop_filter=True) -> dict:
    """Encode one image and write every reconstruction variant; returns a
    manifest row. Failures are reported in the row, never raised."""
    path = Path(path)
    row = {"file": path.name, "status": "ok", "error": ""}
    try:
        frame = read_image(path)
        out = Path(out_root) / path.stem
        out.mkdir(parents=True, exist_ok=True)
        res = encode_frame(frame, CodecConfig(qp=qp, loop_filter_enabled=loop_filter))
        (out / f"{path.stem}.hvs").write_bytes(res.encoded.to_bytes())
        row.update(width=frame.width, height=frame.height, bytes=res.stats["bytes"],
                   bpp=f"{res.stats['bpp']:.4f}")
        std = decode_frame(res.encoded, Standard())
        write_pgm(out / "standard.pgm", std.frame)
        zero = decode_frame(res.encoded, ZeroResidual())
        write_pgm(out / "zero.pgm", zero.frame)
        row["psnr_standard"] = format_psnr(psnr(frame, std.frame))
        row["psnr_zero"] = format_psnr(psnr(frame, zero.frame))
        row["wall_standard_ms"] = f"{1000 * std.timings.wall:.3f}"
        for s in sigmas:
            rp = decode_frame(res.encoded, RandomPerturbation(s, seed))
            lab = _sigma_label(s)
            write_pgm(out / f"perturb_s{lab}.pgm", rp.frame)
            row[f"psnr_perturb_s{lab}"] = format_psnr(psnr(frame, rp.frame))
            row[f"gradcorr_perturb_s{lab}"] = f"{gradient_correlation(std.frame, rp.frame):.4f}"
            row[f"wall_perturb_s{lab}_ms"] = f"{1000 * rp.timings.wall:.3f}"
        write_pgm(out / "partition.pgm", render_partition_map(std.trees, frame.width, frame.height))
        write_pgm(out / "modes.pgm", render_mode_map(std.trees, frame.width, frame.height))
    except Exception as e:  # recorded per file; the batch goes on
        row["status"] = "failed"
        row["error"] = f"{type(e).__name__}: {e}"
    return row


def manifest_columns(sigmas):
    cols = ["file", "status", "error", "width", "height", "bytes", "bpp",
            "psnr_standard", "psnr_zero"]
    labs = [_sigma_label(s) for s in sigmas]
    cols += [f"psnr_perturb_s{l}" for l in labs]
    cols += [f"gradcorr_perturb_s{l}" for l in labs]
    cols += ["wall_standard_ms"] + [f"wall_perturb_s{l}_ms" for l in labs]
    return cols


def cmd_batch(args) -> int:
    src = Path(args.image_dir)
    if not src.is_dir():
        raise UsageError(f"{src} is not a directory")
    images = sorted(p for p in src.iterdir() if p.is_file() and not p.name.startswith("."))
    if not images:
        raise UsageError(f"no images in {src}")
    for s in args.sigmas:
        try:
            generate_rp_series(s, args.seed)
        except ValueError as e:
            raise UsageError(str(e)) from None
    out_root = Path(args.output_root)
    out_root.mkdir(parents=True, exist_ok=True)
    job = dict(out_root=out_root, qp=args.qp, sigmas=args.sigmas, seed=args.seed,
               loop_filter=not args.no_loop_filter)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_process_kw, [(p, job) for p in images]))
    else:
        rows = [process_image(p, **job) for p in images]
    cols = manifest_columns(args.sigmas)
    _write_csv(out_root / "manifest.csv", rows, cols)
    from .report import plot_batch_psnr
    plot_batch_psnr(rows, [c for c in cols if c.startswith("psnr_")], out_root / "manifest_psnr.png")
    failed = [r for r in rows if r["status"] != "ok"]
    for r in failed:
        print(f"failed: {r['file']}: {r['error']}", file=sys.stderr)
    print(f"{len(rows) - len(failed)}/{len(rows)} images processed into {out_root}")
    return EXIT_PARTIAL if failed else EXIT_OK


def _process_kw(item):
    path, job = item
    return process_image(path, **job)


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rpcodec", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("encode", help="encode a PGM/PNG image into an HVS1 container")
    e.add_argument("input")
    e.add_argument("output")
    e.add_argument("--qp", type=_qp, default=32)
    e.add_argument("--no-loop-filter", action="store_true")
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", help="decode a container to PGM under a strategy")
    d.add_argument("input")
    d.add_argument("output")
    d.add_argument("--strategy", default="standard",
                   help="standard | zero | constant:<c> | perturb")
    d.add_argument("--sigma", type=float, default=7.0)
    d.add_argument("--seed", type=_seed, default=0)
    d.add_argument("--rp-file", help="load the perturbation series from a text file")
    d.add_argument("--timing-out", help="write stage timings as JSON")
    d.set_defaults(func=cmd_decode)

    s = sub.add_parser("series", help="dump a perturbation series as text")
    s.add_argument("output")
    s.add_argument("--sigma", type=float, default=7.0)
    s.add_argument("--seed", type=_seed, default=0)
    s.set_defaults(func=cmd_series)

    b = sub.add_parser("bench", help="time decode stages over a directory of containers")
    b.add_argument("directory")
    b.add_argument("--strategies", default="standard,perturb")
    b.add_argument("--repeats", type=_positive_int, default=10)
    b.add_argument("--warmup", type=int, default=1)
    b.add_argument("--sigma", type=float, default=7.0)
    b.add_argument("--seed", type=_seed, default=0)
    b.add_argument("--out", help="CSV path (default stdout); a figure is written next to it")
    b.add_argument("--figure", help="figure path (default: CSV path with .png)")
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("eval", help="AP/mAP of detections against ground truth")
    v.add_argument("gt_dir")
    v.add_argument("det_dir")
    v.add_argument("--classes", help="class map file with 'class_id name' lines")
    v.add_argument("--iou", type=float, default=0.5)
    v.add_argument("--out", default="eval.json")
    v.add_argument("--figure")
    v.set_defaults(func=cmd_eval)

    t = sub.add_parser("batch", help="encode a directory and write all image variants")
    t.add_argument("image_dir")
    t.add_argument("output_root")
    t.add_argument("--qp", type=_qp, default=32)
    t.add_argument("--sigmas", type=_float_list, default=[7.0])
    t.add_argument("--seed", type=_seed, default=0)
    t.add_argument("--no-loop-filter", action="store_true")
    t.add_argument("--jobs", type=_positive_int, default=1)
    t.set_defaults(func=cmd_batch)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"rpcodec {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as e:
        print(f"rpcodec {args.command}: error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
