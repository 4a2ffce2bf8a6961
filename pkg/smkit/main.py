"""
Command-line entry point: `python -m smkit.main <command> ...`

Exit codes: 0 success, 2 invalid parameters, 3 data or numerical failure.
"""
import argparse
import json
import logging
import sys

from pydantic import ValidationError

from smkit import __version__
from smkit.cli import commands
from smkit.config import get_settings
from smkit.exceptions import ConfigError, DataError, SmkError

logger = logging.getLogger("smkit")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str | None = None):
    """Single stderr handler for the smkit loggers"""
    level = (level or get_settings().log_level).upper()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.handlers[:] = [handler]
    logger.setLevel(level)
    logger.propagate = False


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smkit", description="System-matrix simulation, corruption and restoration"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", dest="log_level", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a system matrix")
    p.add_argument("--scanner", required=True)
    p.add_argument("--particle", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--receive")
    p.add_argument("--out", required=True)
    p.add_argument("--quad-order", dest="quad_order", type=int)
    p.add_argument("--model", choices=["anisotropic", "langevin"], default="anisotropic")
    p.add_argument("--derivative", choices=["spectral", "time_domain"], default="spectral")
    p.add_argument("--threads", type=int)
    p.set_defaults(handler=commands.simulate)

    p = sub.add_parser("dataset", help="sample parameters and simulate one split")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", choices=["train", "val", "test"], required=True)
    p.add_argument("--quad-order", dest="quad_order", type=int)
    p.add_argument("--model", choices=["anisotropic", "langevin"], default="anisotropic")
    p.add_argument("--threads", type=int)
    p.set_defaults(handler=commands.dataset)

    p = sub.add_parser("corrupt", help="degrade and add noise")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--task", choices=["denoise", "downsample", "inpaint"], required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--factors")
    p.add_argument("--phase", type=int, default=0)
    p.add_argument("--mask-ratio", dest="mask_ratio", type=float, default=0.1)
    p.add_argument("--mask-blocks", dest="mask_blocks", type=int, default=1)
    p.add_argument("--mask")
    p.add_argument("--shared-mask", dest="shared_mask", action="store_true")
    p.add_argument("--noise", default="synthetic")
    p.add_argument("--random-phase", dest="random_phase", action="store_true")
    p.add_argument("--random-scale", dest="random_scale")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int)
    p.set_defaults(handler=commands.corrupt_sm)

    p = sub.add_parser("restore", help="classical restoration")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--method", choices=["dctf", "cubic", "biharmonic"], required=True)
    p.add_argument("--omega", type=float)
    p.add_argument("--sigma")
    p.add_argument("--target")
    p.add_argument("--reference")
    p.add_argument("--mask")
    p.add_argument("--background")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int)
    p.set_defaults(handler=commands.restore_sm)

    p = sub.add_parser("reconstruct", help="Kaczmarz image reconstruction")
    p.add_argument("--sm", required=True)
    p.add_argument("--meas", required=True)
    p.add_argument("--preset")
    p.add_argument("--snr-threshold", dest="snr_threshold", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--no-nonneg", dest="no_nonneg", action="store_true")
    p.add_argument("--noise-std", dest="noise_std", type=float)
    p.add_argument("--background")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=commands.reconstruct)

    p = sub.add_parser("evaluate", help="PSNR/SSIM against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--metrics", default="psnr,ssim")
    p.add_argument("--group-by", dest="group_by", choices=["sigma", "scale", "size"])
    p.add_argument("--out", required=True)
    p.set_defaults(handler=commands.evaluate)

    p = sub.add_parser("plot", help="grayscale PGM of a component or slice")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--component")
    p.add_argument("--recon-slice", dest="recon_slice")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=commands.plot)

    p = sub.add_parser("measure", help="simulated measurement of a phantom")
    p.add_argument("--sm", required=True)
    p.add_argument("--phantom")
    p.add_argument("--phantom-file", dest="phantom_file")
    p.add_argument("--phantom-out", dest="phantom_out")
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--noise", default="synthetic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=commands.measure)

    p = sub.add_parser("patches", help="training pairs as .npz")
    p.add_argument("--gt", required=True)
    p.add_argument("--corrupted", required=True)
    p.add_argument("--patch", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=commands.export_patches)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    options = vars(args).copy()
    handler = options.pop("handler")
    for key in ("command", "log_level"):
        options.pop(key)

    try:
        result = handler(**options)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        print(f"error: invalid parameter {location}: {first['msg']}", file=sys.stderr)
        return ConfigError.exit_code
    except SmkError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e.strerror or e}: {e.filename}", file=sys.stderr)
        return DataError.exit_code

    print(json.dumps(result, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
