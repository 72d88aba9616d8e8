"""Command-line front end: denoise, bench, estimate-noise.

Exit codes: 0 success, 1 runtime failure (I/O, pipeline), 2 bad flags.
Benchmark CSVs are UTF-8 with LF line endings and a header row; every
artifact is byte-reproducible for a fixed master seed, except that the
seconds column reports real wall time.
"""

import argparse
import hashlib
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DenoiseError
from .imgio import add_gaussian_noise, load_image, psnr, quantize, save_image
from .noise import all_patch_sigma, weak_texture_sigma
from .patches import PatchSpec
from .pipeline import MODES, denoise, denoise_components, parameter_defaults
from .estimator import ESTIMATION_PATCH

logger = logging.getLogger(__name__)

TRACE_COLUMNS = (
    "round",
    "sigma_n",
    "sigma_flt",
    "sigma_res",
    "sigma_geom",
    "sigma_res_geom",
    "sigma_hat",
    "gamma",
    "alpha",
)


def _fmt(value):
    """Shortest round-tripping decimal form, for reproducible CSVs."""
    return f"{float(value):.17g}"


def write_trace(path, trace):
    lines = [",".join(TRACE_COLUMNS)]
    for k, state in enumerate(trace, start=1):
        lines.append(
            ",".join(
                [str(k)]
                + [
                    _fmt(v)
                    for v in (
                        state.sigma_n,
                        state.sigma_flt,
                        state.sigma_res,
                        state.sigma_geom,
                        state.sigma_res_geom,
                        state.sigma_hat,
                        state.gamma,
                        state.alpha,
                    )
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def triple_seed(master, name, sigma, mode):
    """Stable per-cell seed so each benchmark cell replays on its own."""
    text = f"{master}|{name}|{sigma:g}|{mode}"
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % (2**63)


@dataclass
class BenchSpec:
    corpus: list
    sigmas: list
    modes: list
    seed: int
    outdir: Path
    window: int | None = None

    def __post_init__(self):
        if not self.corpus:
            raise ValueError("corpus must not be empty")
        if not self.sigmas:
            raise ValueError("sigmas must not be empty")
        if any(s <= 0 for s in self.sigmas):
            raise ValueError("sigmas must be positive")
        bad = [m for m in self.modes if m not in MODES]
        if bad:
            raise ValueError(f"unknown modes: {bad}")


@dataclass
class BenchRow:
    image: str
    sigma: float
    mode: str
    psnr: float | None
    seconds: float | None
    trace_path: Path | None


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)

    def write_csv(self, path):
        lines = ["image,sigma,mode,psnr,seconds"]
        for row in self.rows:
            psnr_s = "" if row.psnr is None else f"{row.psnr:.2f}"
            secs_s = "" if row.seconds is None else f"{row.seconds:.2f}"
            lines.append(f"{row.image},{row.sigma:g},{row.mode},{psnr_s},{secs_s}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def run_bench(spec):
    """Denoise every (image, sigma, mode) cell and collect the report.

    Unreadable corpus entries keep their rows, with empty psnr and
    seconds, so the report shape is independent of failures.
    """
    outdir = Path(spec.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    images = {}
    for path in spec.corpus:
        path = Path(path)
        name = path.stem
        try:
            images[name] = load_image(path)
        except (OSError, DenoiseError) as exc:
            logger.warning("skipping unreadable image %s: %s", path, exc)
            print(f"warning: skipping unreadable image {path}: {exc}", file=sys.stderr)
            images[name] = None

    cells = sorted(
        (name, sigma, mode)
        for name in images
        for sigma in spec.sigmas
        for mode in spec.modes
    )
    report = BenchReport()
    for name, sigma, mode in cells:
        clean = images[name]
        if clean is None:
            report.rows.append(BenchRow(name, sigma, mode, None, None, None))
            continue
        config = parameter_defaults(sigma, mode=mode)
        if spec.window is not None:
            patch = PatchSpec(
                d=config.patch.d,
                stride=config.patch.stride,
                m=config.patch.m,
                window=spec.window,
            )
            config.patch = patch
        config.seed = triple_seed(spec.seed, name, sigma, mode)
        noisy = add_gaussian_noise(clean, sigma, seed=config.seed)
        start = time.perf_counter()
        denoised, trace = denoise(noisy, config)
        seconds = time.perf_counter() - start
        value = psnr(clean, denoised)
        stem = f"{name}_s{sigma:g}_{mode}"
        save_image(outdir / f"{stem}.pgm", quantize(denoised))
        trace_path = outdir / f"{stem}_trace.csv"
        write_trace(trace_path, trace)
        report.rows.append(BenchRow(name, sigma, mode, value, seconds, trace_path))
        print(f"{name} sigma={sigma:g} {mode}: {value:.2f} dB ({seconds:.1f}s)")
    return report


def _positive(parser, value, flag):
    if value is not None and value <= 0:
        parser.error(f"{flag} must be positive, got {value:g}")
    return value


def _build_config(args, parser):
    _positive(parser, args.sigma, "--sigma")
    try:
        base = parameter_defaults(args.sigma, mode=args.mode)
        patch = PatchSpec(
            d=args.patch_size if args.patch_size is not None else base.patch.d,
            stride=args.stride if args.stride is not None else base.patch.stride,
            m=args.group_size if args.group_size is not None else base.patch.m,
            window=args.window if args.window is not None else base.patch.window,
        )
        base.patch = patch
        if args.iterations is not None:
            base.iterations = args.iterations
        for name in ("delta", "eta", "gamma", "alpha", "tau", "eps"):
            value = getattr(args, name)
            if value is not None:
                setattr(base, name, value)
        if args.weight_c is not None:
            base.weight_c = args.weight_c
        base.seed = args.seed
        base.clip_input = args.clip_input
        base.__post_init__()
    except ValueError as exc:
        parser.error(str(exc))
    return base


def cmd_denoise(args, parser):
    config = _build_config(args, parser)
    noisy = load_image(args.input)
    if args.add_noise:
        noisy = add_gaussian_noise(noisy, args.sigma, seed=args.seed)
    denoised, high, low, trace = denoise_components(noisy, config)

    out = Path(args.out)
    save_image(out, quantize(denoised))
    trace_path = (
        Path(args.trace) if args.trace else out.with_name(out.stem + "_trace.csv")
    )
    write_trace(trace_path, trace)
    if args.emit_components:
        save_image(out.with_name(out.stem + "_high.pgm"), quantize(high))
        save_image(out.with_name(out.stem + "_low.pgm"), quantize(low))

    if args.clean:
        clean = load_image(args.clean)
        raw = psnr(clean, denoised)
        clamped = psnr(clean, quantize(denoised).astype(np.float64))
        raw_s = "inf" if math.isinf(raw) else f"{raw:.2f}"
        clamped_s = "inf" if math.isinf(clamped) else f"{clamped:.2f}"
        print(f"PSNR {raw_s} dB (clamped {clamped_s} dB)")
    return 0


def cmd_bench(args, parser):
    try:
        spec = BenchSpec(
            corpus=args.corpus,
            sigmas=args.sigmas,
            modes=args.modes,
            seed=args.seed,
            outdir=args.outdir,
            window=args.window,
        )
        if spec.window is not None:
            for sigma in spec.sigmas:
                d = parameter_defaults(sigma).patch.d
                if spec.window < d:
                    raise ValueError(
                        f"--window {spec.window} is smaller than the "
                        f"patch size {d} used at sigma {sigma:g}"
                    )
    except ValueError as exc:
        parser.error(str(exc))
    report = run_bench(spec)
    report.write_csv(Path(args.outdir) / "report.csv")
    if all(row.psnr is None for row in report.rows):
        print("error: every benchmark cell failed", file=sys.stderr)
        return 1
    return 0


def cmd_estimate_noise(args, parser):
    img = load_image(args.input)
    spec = PatchSpec(
        d=args.patch_size, stride=1, m=1, window=args.patch_size
    )
    weak = weak_texture_sigma(img, spec, args.seed)
    every = all_patch_sigma(img, args.patch_size)
    print(f"{weak:.4f}")
    print(f"{every:.4f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lrdenoise",
        description="Patch-based low-rank grayscale image denoising.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    den = sub.add_parser("denoise", help="denoise a single PGM image")
    den.add_argument("--input", required=True, help="input PGM path")
    den.add_argument("--out", required=True, help="output PGM path")
    den.add_argument("--sigma", type=float, required=True, help="noise std dev")
    den.add_argument("--mode", choices=MODES, default="gwnnm")
    den.add_argument("--add-noise", action="store_true",
                     help="treat input as clean and add noise first")
    den.add_argument("--clean", help="clean reference; prints PSNR")
    den.add_argument("--trace", help="noise trace CSV path (default <out>_trace.csv)")
    den.add_argument("--emit-components", action="store_true",
                     help="also write high/low component PGMs next to --out")
    den.add_argument("--iterations", type=int)
    den.add_argument("--patch-size", type=int)
    den.add_argument("--stride", type=int)
    den.add_argument("--group-size", type=int)
    den.add_argument("--window", type=int)
    den.add_argument("--delta", type=float)
    den.add_argument("--eta", type=float)
    den.add_argument("--gamma", type=float)
    den.add_argument("--alpha", type=float)
    den.add_argument("--tau", type=float)
    den.add_argument("--weight-c", type=float, dest="weight_c")
    den.add_argument("--eps", type=float)
    den.add_argument("--seed", type=int, default=0)
    den.add_argument("--clip-input", action="store_true")
    den.set_defaults(func=cmd_denoise)

    ben = sub.add_parser("bench", help="PSNR benchmark over a clean corpus")
    ben.add_argument("--corpus", nargs="+", required=True, help="clean PGM paths")
    ben.add_argument("--sigmas", nargs="+", type=float, required=True)
    ben.add_argument("--modes", nargs="+", choices=MODES, default=list(MODES))
    ben.add_argument("--seed", type=int, default=0, help="master seed")
    ben.add_argument("--outdir", default="bench_out")
    ben.add_argument("--window", type=int,
                     help="override the search window side, e.g. 61 for "
                          "pseudo-periodic content")
    ben.set_defaults(func=cmd_bench)

    est = sub.add_parser("estimate-noise", help="blind noise level estimate")
    est.add_argument("--input", required=True)
    est.add_argument("--patch-size", type=int, default=ESTIMATION_PATCH)
    est.add_argument("--seed", type=int, default=0)
    est.set_defaults(func=cmd_estimate_noise)

    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (OSError, DenoiseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
