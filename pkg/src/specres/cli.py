"""Command line interface for quantizing, decoding and benchmarking atomic measures."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io as sio
from .blasso import BlassoConfig, blasso_grid
from .esprit import EspritConfig, esprit
from .harness import TrialSpec, generate_measure, msq_floor_experiment, sweep
from .measure import fourier_coefficients
from .metrics import error_report
from .noise_shaping import (
    QuantizerConfig,
    beta_quantize,
    condense,
    msq_stream,
    reweight_decode,
)

log = logging.getLogger("specres")


def parse_int_list(text: str) -> tuple[int, ...]:
    """Parse ``2,3,4`` or ``1..6`` (inclusive) or a mix such as ``1..3,8``."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"empty list: {text!r}")
    return tuple(out)


def _choice_pair(value: str, options: tuple[str, str]) -> tuple[str, ...]:
    return options if value == "both" else (value,)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _read(path: str) -> str:
    return sys.stdin.read() if path == "-" else Path(path).read_text()


def cmd_experiment(args) -> int:
    spec = TrialSpec(
        delta=args.delta,
        m=args.m,
        lambda_list=args.lambdas,
        k_list=args.ks,
        trials=args.trials,
        seed=args.seed,
        decoders=_choice_pair(args.decoder, ("tvmin", "esprit")),
        quantizers=_choice_pair(args.quantizer, ("beta", "msq")),
        even_esprit=not args.odd_esprit,
        msq_all_samples=args.msq_all_samples,
        tau=args.tau,
        grid_factor=args.grid_factor,
        max_iter=args.max_iter,
        refine=args.refine,
        prune_ratio=args.prune,
    )
    table = msq_floor_experiment(spec) if args.floor else sweep(spec, workers=args.workers)
    if args.out:
        table.write(args.out, extended=args.extended)
    else:
        sys.stdout.write(table.to_csv(extended=args.extended))
    return 0


def _quantizer_settings(args, n_samples: int) -> tuple[int, int, int, float]:
    settings = sio.load_config(args.config) if args.config else {}
    lam = args.lam if args.lam is not None else settings.get("lambda")
    K = args.K if args.K is not None else settings.get("K")
    A = args.A if args.A is not None else settings.get("A", 1.0)
    M = settings.get("M", n_samples)
    if lam is None or K is None:
        raise SystemExit("quantize needs --K and --lambda (or a config file)")
    return int(M), int(lam), int(K), float(A)


def cmd_quantize(args) -> int:
    y = sio.parse_samples(_read(args.input))
    M, lam, K, A = _quantizer_settings(args, y.size)
    if M > y.size:
        raise SystemExit(f"config asks for M={M} samples, input has {y.size}")
    usable = (M // lam) * lam
    if usable < y.size:
        log.warning("discarding %d trailing samples so lambda divides M", y.size - usable)
    y = y[:usable]
    cfg = QuantizerConfig.from_rule(usable, lam, K, A)
    stream = beta_quantize(y, cfg) if args.method == "beta" else msq_stream(y, cfg.alphabet)
    _write(args.out, sio.format_stream(stream, cfg))
    return 0


def cmd_decode(args) -> int:
    stream, cfg = sio.parse_stream(_read(args.input))
    if stream.method == "msq":
        # raw samples, no condensation and no re-weighting
        yv = stream.q[: cfg.m]
        eps = np.sqrt(2 * yv.size) * cfg.delta
    else:
        yv = condense(stream.q, cfg)
        eps = cfg.eps_v
    if args.decoder == "esprit":
        if args.S is None:
            raise SystemExit("ESPRIT needs the atom count --S")
        nu = esprit(yv, EspritConfig(yv.size, args.S, strict=False))
    else:
        tau = args.tau if args.tau is not None else eps / 2
        bcfg = BlassoConfig(
            m=yv.size,
            tau=tau,
            grid_size=args.grid_size,
            max_iter=args.max_iter,
            prune_threshold=args.prune * tau if args.prune is not None else None,
            refine=args.refine,
        )
        nu = blasso_grid(yv, bcfg)
    est = nu if stream.method == "msq" else reweight_decode(nu, cfg)
    _write(args.out, sio.format_measure(est))
    return 0


def cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    _write(args.out, sio.format_measure(generate_measure(args.delta, rng)))
    return 0


def cmd_sample(args) -> int:
    mu = sio.parse_measure(_read(args.input))
    _write(args.out, sio.format_samples(fourier_coefficients(mu, args.M), f"M={args.M}"))
    return 0


def cmd_score(args) -> int:
    truth = sio.parse_measure(_read(args.truth))
    est = sio.parse_measure(_read(args.estimate))
    rep = error_report(truth, est, args.M)
    _write(args.out, ",".join(rep.CSV_FIELDS) + "\n" + rep.to_csv() + "\n")
    return 0


def _add_tvmin_knobs(p: argparse.ArgumentParser, *, experiment: bool) -> None:
    p.add_argument("--tau", type=float, default=None, help="BLASSO regularization (default eps/2)")
    if experiment:
        p.add_argument("--grid-factor", type=int, default=16, help="grid size as a multiple of m")
    else:
        p.add_argument("--grid-size", type=int, default=None, help="grid points (default 16 m)")
    p.add_argument("--max-iter", type=int, default=50_000)
    p.add_argument("--refine", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--prune", type=float, default=0.1 if experiment else None,
                   help="amplitude cutoff as a fraction of tau (default 0.1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specres", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("experiment", help="Monte-Carlo rate-distortion sweep to CSV")
    p.add_argument("--delta", type=float, default=0.15)
    p.add_argument("--m", type=int, default=None, help="condensed size (default ceil(4/delta))")
    p.add_argument("--k", dest="ks", type=parse_int_list, default=(2, 3, 4, 5, 6, 7, 8))
    p.add_argument("--lambda", dest="lambdas", type=parse_int_list, default=(1, 2, 3, 4, 5, 6))
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--decoder", choices=("tvmin", "esprit", "both"), default="both")
    p.add_argument("--quantizer", choices=("beta", "msq", "both"), default="both")
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=None, help="overrides SPECRES_THREADS")
    p.add_argument("--odd-esprit", action="store_true", help="run ESPRIT on odd m as given")
    p.add_argument("--msq-all-samples", action="store_true",
                   help="feed all M MSQ samples to the decoder instead of the first m")
    p.add_argument("--floor", action="store_true",
                   help="oracle-support least squares instead of the decoders")
    p.add_argument("--extended", action="store_true", help="append a max_amp_l2 column")
    _add_tvmin_knobs(p, experiment=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("quantize", help="quantize a sample file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--lambda", dest="lam", type=int, default=None)
    p.add_argument("--A", type=float, default=None)
    p.add_argument("--config", default=None, help="JSON with keys M, lambda, K, A")
    p.add_argument("--method", choices=("beta", "msq"), default="beta")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("decode", help="decode a quantized stream to a measure")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--decoder", choices=("esprit", "tvmin"), required=True)
    p.add_argument("--S", type=int, default=None, help="atom count (ESPRIT)")
    p.add_argument("--out", default=None)
    _add_tvmin_knobs(p, experiment=False)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("generate", help="draw a random separated measure")
    p.add_argument("--delta", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("sample", help="first M Fourier coefficients of a measure file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("score", help="error metrics of an estimate against a reference")
    p.add_argument("--truth", required=True)
    p.add_argument("--estimate", required=True)
    p.add_argument("--M", type=int, required=True, help="sample count setting neighbourhood radius")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_score)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
