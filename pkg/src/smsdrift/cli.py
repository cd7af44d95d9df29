"""Command-line driver: ``smsdrift <command> [options]``.

Every command writes a ``manifest.json`` next to its outputs holding the
command line, resolved parameters and the package version, so a run can be
repeated exactly. Usage errors exit with status 2, runtime failures with 1.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io as sio
from .blur import motion_blur_known_direction, motion_blur_m2
from .bootstrap import bootstrap_average_image, bootstrap_bands
from .contrast import ContrastConfig, default_xi_localization, default_xi_simulation
from .drift_models import DriftFamily, DriftParams, average_direction
from .estimator import OptimizerConfig, estimate, estimate_spectral, reconstruct, track_fiducial
from .frames import bin_localizations, superimpose
from .simulate import (RNG_ALGORITHM, NoiseModel, SimulationSpec, make_test_image,
                       simulate_stack, variance_stabilize)
from .spectral import binned_spectra

log = logging.getLogger("smsdrift")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers

def _csv_floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _csv_ints(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _family(text: str) -> DriftFamily:
    try:
        return DriftFamily.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    env = os.environ.get("DRIFT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"DRIFT_SEED must be an integer, got {env!r}")
    return 0


def _params(family: DriftFamily, theta) -> DriftParams:
    try:
        return DriftParams(family, theta)
    except ValueError as exc:
        raise UsageError(str(exc))


def _out_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _manifest(directory: Path, args, params: dict, inputs: list, outputs: list) -> None:
    doc = {
        "command": args.command,
        "argv": sys.argv[1:],
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "parameters": params,
        "version": __version__,
        "rng": RNG_ALGORITHM,
    }
    (directory / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _config(args, T: int, N: int, counts, localization: bool = False) -> ContrastConfig:
    xi = args.xi
    if xi is None:
        xi = default_xi_localization(N) if localization else default_xi_simulation(T)
    if args.weights == "counts":
        return ContrastConfig.from_counts(xi, counts)
    return ContrastConfig(xi)


def _load_stack(args):
    stack = sio.read_stack(args.stack)
    if getattr(args, "stabilize", False):
        stack = variance_stabilize(stack, center=True)
    return stack


def _blur_scores(image, direction) -> dict:
    m2, phi = motion_blur_m2(image)
    out = {"m2": m2, "phi_min": phi}
    if direction is not None and np.any(direction):
        out["m2_known"] = motion_blur_known_direction(image, direction)
    return out


# ---------------------------------------------------------------- commands

def cmd_simulate(args) -> int:
    if args.image:
        image = sio.read_grid(args.image)
    else:
        image = make_test_image(args.phantom_size)
    drift = _params(args.drift, args.theta)
    if args.noise == "poisson":
        if args.sigma_given:
            log.warning("--sigma is ignored for --noise poisson")
        noise = NoiseModel.poisson()
    else:
        noise = NoiseModel(args.noise, args.sigma)
    seed = _seed(args)
    stack = simulate_stack(SimulationSpec(image, drift, args.T, noise, seed))
    out = Path(args.out)
    sio.write_stack(stack, out)
    mdir = out.parent if out.suffix in (".bin", ".drft") else out
    _manifest(mdir, args, {"T": args.T, "N": stack.N, "family": str(drift.family),
                           "theta": list(drift.vector), "noise": noise.kind,
                           "sigma": noise.scale, "seed": seed},
              [args.image] if args.image else [], [out])
    print(f"wrote {stack.T} frames of {stack.N}x{stack.N} to {out}")
    return 0


def cmd_estimate(args) -> int:
    out = _out_dir(args.out)
    opt = OptimizerConfig(start=args.start) if args.start else OptimizerConfig()
    if args.localizations:
        if args.T is None or args.N is None:
            raise UsageError("--localizations needs --T and --N")
        table = sio.read_localizations(args.localizations, args.raw_frames)
        spec, counts = binned_spectra(table, args.T, args.N, args.xi or default_xi_localization(args.N))
        config = _config(args, args.T, args.N, counts, localization=True)
        res = estimate_spectral(spec, args.family, config, opt)
        stack = bin_localizations(table, args.T, args.N) if args.image else None
        inputs = [args.localizations]
    else:
        stack = _load_stack(args)
        config = _config(args, stack.T, stack.N, stack.counts)
        res = estimate(stack, args.family, config, opt, subdomains=args.subdomains)
        inputs = [args.stack]
    rec_path = out / "estimate.txt"
    rec_path.write_text(res.to_record())
    outputs = [rec_path]
    if stack is not None:
        # blur is only meaningful at full resolution, so that is the default
        rec_cfg = ContrastConfig(args.image_xi if args.image_xi else stack.N, config.weights)
        image = reconstruct(stack, res.theta_hat, rec_cfg)
        sio.write_grid(image, out / "reconstruction.txt")
        outputs.append(out / "reconstruction.txt")
        if args.pgm:
            sio.write_pgm(image, out / "reconstruction.pgm")
            outputs.append(out / "reconstruction.pgm")
        u = average_direction(res.theta_hat)
        si = _blur_scores(superimpose(stack), u)
        rc = _blur_scores(image, u)
        lines = [f"{k}_superimposed={v!r}" for k, v in si.items()]
        lines += [f"{k}_reconstructed={v!r}" for k, v in rc.items()]
        (out / "blur.txt").write_text("\n".join(lines) + "\n")
        outputs.append(out / "blur.txt")
    _manifest(out, args, {"family": str(args.family), "xi": config.xi, "weights": args.weights,
                          "start": list(opt.start) if opt.start else None,
                          "subdomains": args.subdomains}, inputs, outputs)
    sys.stdout.write(res.to_record())
    return 0


def cmd_reconstruct(args) -> int:
    stack = _load_stack(args)
    theta = _params(args.family, args.theta)
    if args.xi is None:
        args.xi = float(stack.N)  # full resolution unless asked otherwise
    config = _config(args, stack.T, stack.N, stack.counts)
    image = reconstruct(stack, theta, config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    sio.write_grid(image, out)
    outputs = [out]
    if args.pgm:
        sio.write_pgm(image, out.with_suffix(".pgm"))
        outputs.append(out.with_suffix(".pgm"))
    _manifest(out.parent, args, {"family": str(args.family), "theta": list(theta.vector),
                                 "xi": config.xi, "weights": args.weights}, [args.stack], outputs)
    return 0


def cmd_blur(args) -> int:
    image = sio.read_grid(args.image)
    m2, phi = motion_blur_m2(image)
    print(f"m2={m2!r}\nphi_min={phi!r}")
    if args.direction:
        print(f"m2_known={motion_blur_known_direction(image, args.direction)!r}")
    return 0


def cmd_bootstrap(args) -> int:
    stack = _load_stack(args)
    config = _config(args, stack.T, stack.N, stack.counts)
    if args.theta:
        theta = _params(args.family, args.theta)
    else:
        theta = estimate(stack, args.family, config).theta_hat
    seed = _seed(args)
    bands = bootstrap_bands(stack, theta, B=args.B, alpha=args.alpha, seed=seed, config=config,
                            image_xi=args.image_xi, n_jobs=args.jobs)
    out = _out_dir(args.out)
    (out / "bands.csv").write_text(bands.to_csv())
    (out / "summary.txt").write_text(f"theta_hat={theta.to_csv()}\n" + bands.summary()
                                     + f"dropped={bands.n_dropped}\n")
    outputs = [out / "bands.csv", out / "summary.txt"]
    if args.average_image:
        img = bootstrap_average_image(stack, bands, config)
        sio.write_grid(img, out / "average.txt")
        outputs.append(out / "average.txt")
    _manifest(out, args, {"family": str(args.family), "theta": list(theta.vector), "B": args.B,
                          "alpha": args.alpha, "seed": seed, "xi": config.xi,
                          "image_xi": args.image_xi}, [args.stack], outputs)
    sys.stdout.write(bands.summary())
    return 0


def cmd_bin(args) -> int:
    table = sio.read_localizations(args.localizations, args.raw_frames)
    stack = bin_localizations(table, args.T, args.N)
    out = Path(args.out)
    sio.write_stack(stack, out)
    mdir = out.parent if out.suffix in (".bin", ".drft") else out
    _manifest(mdir, args, {"T": args.T, "N": args.N, "raw_frames": table.n_frames,
                           "rejected": stack.n_rejected}, [args.localizations], [out])
    print(f"binned {len(table) - stack.n_rejected} records into {args.T} frames"
          + (f" ({stack.n_rejected} rejected)" if stack.n_rejected else ""))
    return 0


def cmd_track(args) -> int:
    stack = sio.read_stack(args.stack)
    path = track_fiducial(stack, args.region)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    t = np.arange(stack.T) / stack.T
    with out.open("w") as fh:
        fh.write("t,x1,x2\n")
        for a, (b, c) in zip(t, path):
            fh.write(f"{float(a)!r},{float(b)!r},{float(c)!r}\n")
    _manifest(out.parent, args, {"region": list(args.region)}, [args.stack], [out])
    return 0


def cmd_reproduce(args) -> int:
    from . import experiments as ex
    table = {"means": ex.mean_table, "rmse": ex.rmse_table, "blur": ex.blur_table}[args.table]
    families = args.families.split(",")
    noises = args.noises.split(",")
    for f in families:
        if f not in ex.TRUE_PARAMS:
            raise UsageError(f"unknown family {f!r}")
    for n in noises:
        if n not in ex.NOISE_KINDS:
            raise UsageError(f"unknown noise {n!r}")
    seed = _seed(args)
    rows = table(families, noises, list(args.T), args.reps, seed=seed, N=args.N, n_jobs=args.jobs)
    text = ex.to_csv(rows)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        _manifest(out.parent, args, {"table": args.table, "reps": args.reps, "T": list(args.T),
                                     "families": families, "noises": noises, "seed": seed,
                                     "N": args.N}, [], [out])
    sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------- parser

class _SigmaAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        namespace.sigma_given = True


def _add_contrast(p):
    p.add_argument("--xi", type=float, help="spectral cutoff (default: ceil(sqrt T) for stacks)")
    p.add_argument("--weights", choices=("uniform", "counts"), default="uniform")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="smsdrift", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a sparse frame stack")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--image", help="ground-truth grid file (default: built-in phantom)")
    src.add_argument("--phantom-size", type=int, default=256)
    p.add_argument("--drift", type=_family, required=True)
    p.add_argument("--theta", type=_csv_floats, required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--noise", choices=("gauss", "t2", "poisson"), default="gauss")
    p.add_argument("--sigma", type=float, default=0.1, action=_SigmaAction)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="directory, or a .bin file")
    p.set_defaults(func=cmd_simulate, sigma_given=False)

    p = sub.add_parser("estimate", help="estimate the drift")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--stack")
    src.add_argument("--localizations", help="x1,x2,frame CSV")
    p.add_argument("--family", type=_family, required=True)
    p.add_argument("--start", type=_csv_floats)
    p.add_argument("--subdomains", type=int, default=1)
    p.add_argument("--stabilize", action="store_true", help="variance-stabilise counts first")
    p.add_argument("--T", type=int, help="histogram count for --localizations")
    p.add_argument("--N", type=int, help="grid size for --localizations")
    p.add_argument("--raw-frames", type=int, help="raw frame count T' (default: largest frame)")
    p.add_argument("--image", action="store_true",
                   help="with --localizations also bin and reconstruct the image")
    p.add_argument("--image-xi", type=float, help="cutoff for the reconstruction (default: N)")
    p.add_argument("--pgm", action="store_true", help="also export an 8-bit PGM preview")
    _add_contrast(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("reconstruct", help="drift-corrected image for a given θ")
    p.add_argument("--stack", required=True)
    p.add_argument("--family", type=_family, required=True)
    p.add_argument("--theta", type=_csv_floats, required=True)
    p.add_argument("--stabilize", action="store_true")
    p.add_argument("--pgm", action="store_true")
    _add_contrast(p)  # --xi defaults to N here
    p.add_argument("--out", required=True, help="output grid file")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("blur", help="motion-blur scores of an image")
    p.add_argument("--image", required=True)
    p.add_argument("--direction", type=_csv_floats)
    p.set_defaults(func=cmd_blur)

    p = sub.add_parser("bootstrap", help="residual bootstrap confidence bands")
    p.add_argument("--stack", required=True)
    p.add_argument("--family", type=_family, required=True)
    p.add_argument("--theta", type=_csv_floats, help="θ̂ (estimated when omitted)")
    p.add_argument("--B", type=int, default=200)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--image-xi", type=float)
    p.add_argument("--stabilize", action="store_true")
    p.add_argument("--average-image", action="store_true")
    _add_contrast(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("bin", help="bin a localization table into a stack")
    p.add_argument("--localizations", required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--raw-frames", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bin)

    p = sub.add_parser("track", help="fiducial centroid track")
    p.add_argument("--stack", required=True)
    p.add_argument("--region", type=_csv_ints, required=True, help="row0,row1,col0,col1")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("reproduce", help="replicated simulation tables")
    p.add_argument("--table", choices=("means", "rmse", "blur"), required=True)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--T", type=_csv_ints, default=(20, 50, 100))
    p.add_argument("--families", default="linear,quadratic,cubic,jump")
    p.add_argument("--noises", default="gauss,t2,poisson")
    p.add_argument("--N", type=int, default=256)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"smsdrift: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"smsdrift: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
