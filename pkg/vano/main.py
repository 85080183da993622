import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from vano import dependencies
from vano.config import dump_config_text, load_config
from vano.constants import EXIT_OK, EXIT_USAGE, METRICS_FILE
from vano.data.generators import sample_bumps, sample_grf
from vano.data.storage import load_dataset, save_dataset
from vano.documentation import CLI_DESCRIPTION, CLI_EPILOG, CONFIG_HELP
from vano.exceptions import ConfigError, VanoError
from vano.model.vano_model import VanoModel
from vano.schemas import PRESETS, BumpsParams, GRFParams, KernelFamily, TrainConfig
from vano.services.evaluation_service import EvaluationService
from vano.services.sampling_service import SamplingService
from vano.services.training_service import TrainingService
from vano.settings import settings

logger = logging.getLogger(__name__)

EVAL_METRICS = ("hs", "mmd", "gmmd", "circular", "pca", "elbo")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vano",
        description=CLI_DESCRIPTION,
        epilog=CLI_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen-data", help="generate a synthetic dataset file")
    gen_kinds = gen.add_subparsers(dest="kind", required=True)
    for kind in ("grf", "bumps"):
        sub = gen_kinds.add_parser(kind)
        sub.add_argument("--n", type=int, default=2048, help="number of functions")
        sub.add_argument("--seed", type=int, default=0)
        sub.add_argument("--offset", type=int, default=0, help="first per-sample stream index")
        sub.add_argument("--out", type=Path, required=True)
        if kind == "grf":
            sub.add_argument("--alpha", type=float, default=2.0)
            sub.add_argument("--tau", type=float, default=3.0)
            sub.add_argument("--n-eig", type=int, default=32)
            sub.add_argument("--m", type=int, default=128, help="grid points on [0, 1]")
        else:
            sub.add_argument("--side", type=int, default=48, help="grid points per axis on [0, 1]^2")
            sub.add_argument("--sigma-max", type=float, default=0.1)
            sub.add_argument("--sigma-offset", type=float, default=0.01)
            sub.add_argument("--standard-normalization", action="store_true",
                             help="use (2 pi)^-1 instead of (2 pi)^-1/2")

    train = commands.add_parser("train", help="train a model", epilog=CONFIG_HELP,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    source = train.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", choices=sorted(PRESETS))
    source.add_argument("--config", type=Path)
    train.add_argument("--data", type=Path, required=True)
    train.add_argument("--out", type=Path, help="run directory (default: $VANO_RUNS_DIR/<experiment>)")
    train.add_argument("--iterations", type=int, help="override the configured iteration count")
    train.add_argument("--checkpoint-every", type=int)

    sample = commands.add_parser("sample", help="decode prior samples on a uniform grid")
    sample.add_argument("checkpoint", type=Path)
    sample.add_argument("--count", type=int, default=512)
    sample.add_argument("--resolution", type=int, nargs="+", required=True, help="points per axis")
    sample.add_argument("--seed", type=int, default=0)
    sample.add_argument("--out", type=Path, required=True)

    recon = commands.add_parser("reconstruct", help="encode and decode a dataset")
    recon.add_argument("checkpoint", type=Path)
    recon.add_argument("data", type=Path)
    recon.add_argument("--resolution", type=int, nargs="+", required=True, help="points per axis")
    recon.add_argument("--out", type=Path, required=True,
                       help="prefix; writes <out>_input.fds, <out>_recon.fds and <out>_error.fds")

    ev = commands.add_parser("eval", help="compute a metric and append it to a metrics CSV")
    ev.add_argument("metric", choices=EVAL_METRICS)
    ev.add_argument("files", type=Path, nargs="+")
    ev.add_argument("--analytic", help="reference covariance for hs, e.g. grf:alpha=2,tau=3")
    ev.add_argument("--sigma", type=float, default=1.0, help="kernel length-scale for mmd")
    ev.add_argument("--sigma-min", type=float, default=0.1)
    ev.add_argument("--sigma-max", type=float, default=20.0)
    ev.add_argument("--grid-size", type=int, default=64)
    ev.add_argument("--raw", action="store_true", help="unweighted Euclidean kernel distance")
    ev.add_argument("--top", type=int, default=10, help="eigenvalues reported by pca")
    ev.add_argument("--quadrature", choices=("weighted", "raw_sum"), default="weighted")
    ev.add_argument("--encoder-input", type=Path, help="dataset the encoder reads for elbo")
    ev.add_argument("--seed", type=int)
    destination = ev.add_mutually_exclusive_group()
    destination.add_argument("--run", type=Path, help="run directory whose metrics.csv receives the rows")
    destination.add_argument("--metrics-out", type=Path, help="metrics CSV to append to (default: ./metrics.csv)")

    audit = commands.add_parser("audit", help="check that a run directory is complete")
    audit.add_argument("run_dir", type=Path)

    preset = commands.add_parser("preset", help="print a preset as a config file")
    preset.add_argument("name", choices=sorted(PRESETS))
    return parser


def cmd_gen_data(args: argparse.Namespace) -> int:
    if args.kind == "grf":
        params = GRFParams(alpha=args.alpha, tau=args.tau, n_eig=args.n_eig, m=args.m, n=args.n)
        ds = sample_grf(params, args.seed, offset=args.offset)
    else:
        params = BumpsParams(
            n=args.n,
            side=args.side,
            sigma_max=args.sigma_max,
            sigma_offset=args.sigma_offset,
            standard_normalization=args.standard_normalization,
        )
        ds = sample_bumps(params, args.seed, offset=args.offset)
    save_dataset(ds, args.out)
    print(json.dumps({"path": str(args.out), "N": len(ds), "m": ds.m, **ds.provenance.model_dump()}, sort_keys=True))
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    config = TrainConfig.from_preset(args.preset) if args.preset else load_config(args.config)
    overrides = {}
    if args.iterations is not None:
        overrides["iterations"] = args.iterations
    if args.checkpoint_every is not None:
        overrides["checkpoint_every"] = args.checkpoint_every
    if overrides:
        config = TrainConfig(**{**config.model_dump(), **overrides})

    dataset = load_dataset(args.data)
    repo = dependencies.get_run_repository(args.out or Path(settings.VANO_RUNS_DIR) / config.experiment)
    repo.prepare(config)
    result = TrainingService(config, dataset, repo, data_label=str(args.data)).run()
    print(f"trained {result.steps} steps -> {result.final_checkpoint}")
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    model = VanoModel.load(args.checkpoint)
    counts = args.resolution[0] if len(args.resolution) == 1 else args.resolution
    ds = SamplingService(model, str(args.checkpoint)).sample_prior(args.count, counts, args.seed)
    save_dataset(ds, args.out)
    print(f"wrote {len(ds)} samples on {ds.m} points -> {args.out}")
    return EXIT_OK


def cmd_reconstruct(args: argparse.Namespace) -> int:
    model = VanoModel.load(args.checkpoint)
    counts = args.resolution[0] if len(args.resolution) == 1 else args.resolution
    outputs = SamplingService(model, str(args.checkpoint)).reconstruct(load_dataset(args.data), counts)
    for suffix, ds in zip(("input", "recon", "error"), outputs):
        path = args.out.with_name(f"{args.out.name}_{suffix}.fds")
        save_dataset(ds, path)
        print(f"wrote {path}")
    return EXIT_OK


def _expect_files(args: argparse.Namespace, count: int) -> List[Path]:
    if len(args.files) != count:
        raise ConfigError(f"eval {args.metric} takes {count} file(s), got {len(args.files)}")
    return args.files


def metrics_destination(args: argparse.Namespace) -> Path:
    if args.run is None:
        return args.metrics_out or Path(METRICS_FILE)
    repo = dependencies.get_run_repository(args.run)
    if not repo.metrics_path.is_file():
        raise ConfigError(f"{args.run} is not a run directory (no {METRICS_FILE})")
    return repo.metrics_path


def cmd_eval(args: argparse.Namespace) -> int:
    service = EvaluationService(metrics_destination(args), seed=args.seed)
    if args.metric == "hs":
        if args.analytic:
            (target,) = _expect_files(args, 1)
            rows = service.hs_analytic(args.analytic, target)
        else:
            rows = service.hs_files(*_expect_files(args, 2))
    elif args.metric == "mmd":
        rows = service.mmd(*_expect_files(args, 2), sigma=args.sigma, raw=args.raw)
    elif args.metric == "gmmd":
        fam = KernelFamily(sigma_min=args.sigma_min, sigma_max=args.sigma_max, grid_size=args.grid_size)
        rows = service.gmmd(*_expect_files(args, 2), fam=fam, raw=args.raw)
    elif args.metric == "circular":
        rows = service.circular(*_expect_files(args, 1))
    elif args.metric == "pca":
        rows = service.pca(*_expect_files(args, 1), top=args.top)
    else:
        checkpoint, data = _expect_files(args, 2)
        rows = service.elbo(
            checkpoint, data,
            quadrature_mode=args.quadrature,
            seed=args.seed or 0,
            encoder_input=args.encoder_input,
        )
    print(service.headline(rows))
    return EXIT_OK


def cmd_audit(args: argparse.Namespace) -> int:
    problems = dependencies.get_run_repository(args.run_dir).audit()
    for problem in problems:
        print(f"FAIL {problem}")
    if problems:
        return EXIT_USAGE
    print(f"OK {args.run_dir}")
    return EXIT_OK


def cmd_preset(args: argparse.Namespace) -> int:
    sys.stdout.write(dump_config_text(TrainConfig.from_preset(args.name)))
    return EXIT_OK


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "sample": cmd_sample,
    "reconstruct": cmd_reconstruct,
    "eval": cmd_eval,
    "audit": cmd_audit,
    "preset": cmd_preset,
}


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(
        level=settings.VANO_LOG_LEVEL,
        format='%(asctime)s - %(levelname)s - [VANO] - %(message)s'
    )
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except VanoError as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        logger.error(f"{args.command}: invalid parameters: {e}")
        print(f"error: invalid parameters: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
