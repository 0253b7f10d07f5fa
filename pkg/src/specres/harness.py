"""Monte-Carlo rate-distortion experiments over quantizers, decoders, K and lambda.

Every trial index owns a random stream derived from ``(seed, trial)``, so the
same measures are reused across all ``(K, lambda, decoder, quantizer)``
combinations and rows differ only through the encoding/decoding path.
Gaussian draws use numpy's PCG64 generator with its ziggurat normal sampler.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .blasso import BlassoConfig, blasso_grid
from .esprit import EspritConfig, esprit, least_squares_amplitudes
from .measure import AtomicMeasure, ParameterError, fourier_coefficients
from .metrics import ErrorReport, error_report
from .noise_shaping import (
    QuantizerConfig,
    beta_quantize,
    condense,
    msq_quantize,
    reweight_decode,
)

log = logging.getLogger(__name__)

DECODERS = ("tvmin", "esprit")
QUANTIZERS = ("beta", "msq")
CSV_HEADER = (
    "K,lambda,decoder,quantizer,trials,failures,"
    "max_e1,max_e2,max_e3,max_elip_upper,max_einf2,guide"
).split(",")


def guide_value(decoder: str, K: int, lam: int) -> float:
    """Reference decay curves: 0.75 lam^1.5 K^-lam (TV-min), 1.6 lam K^-lam (ESPRIT)."""
    if decoder == "tvmin":
        return 0.75 * lam**1.5 * K ** (-lam)
    if decoder == "esprit":
        return 1.6 * lam * K ** (-lam)
    raise ValueError(f"no guide curve for decoder {decoder!r}")


@dataclass(frozen=True)
class TrialSpec:
    delta: float = 0.15
    m: int | None = None
    lambda_list: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    k_list: tuple[int, ...] = (2, 3, 4, 5, 6, 7, 8)
    trials: int = 100
    seed: int = 42
    decoders: tuple[str, ...] = DECODERS
    quantizers: tuple[str, ...] = QUANTIZERS
    A: float = 1.0
    even_esprit: bool = True
    msq_all_samples: bool = False
    tau: float | None = None
    grid_factor: int = 16
    max_iter: int = 50_000
    refine: bool = True
    prune_ratio: float = 0.1

    def __post_init__(self):
        if not self.delta > 0:
            raise ParameterError(f"delta must be positive, got {self.delta}")
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if any(lam < 1 for lam in self.lambda_list):
            raise ParameterError("every lambda must be >= 1")
        if any(K < 2 for K in self.k_list):
            raise ParameterError("every K must be >= 2")
        for d in self.decoders:
            if d not in DECODERS:
                raise ParameterError(f"unknown decoder {d!r}")
        for q in self.quantizers:
            if q not in QUANTIZERS:
                raise ParameterError(f"unknown quantizer {q!r}")
        if self.m is None:
            object.__setattr__(self, "m", math.ceil(4 / self.delta - 1e-9))
        object.__setattr__(self, "lambda_list", tuple(self.lambda_list))
        object.__setattr__(self, "k_list", tuple(self.k_list))
        object.__setattr__(self, "decoders", tuple(self.decoders))
        object.__setattr__(self, "quantizers", tuple(self.quantizers))

    def condensed_size(self, decoder: str) -> int:
        """ESPRIT runs on the next even size when ``even_esprit`` is set."""
        if decoder == "esprit" and self.even_esprit and self.m % 2:
            return self.m + 1
        return self.m


@dataclass(frozen=True)
class SweepRow:
    K: int
    lam: int
    decoder: str
    quantizer: str
    n_trials: int
    failures: int
    max_e1: float
    max_e2: float
    max_e3: float
    max_elip_upper: float
    max_einf2: float
    guide: float
    max_amp_l2: float = math.nan

    def csv_values(self) -> list[str]:
        vals = [self.max_e1, self.max_e2, self.max_e3, self.max_elip_upper, self.max_einf2, self.guide]
        return [str(self.K), str(self.lam), self.decoder, self.quantizer, str(self.n_trials),
                str(self.failures)] + [_fmt(v) for v in vals]


def _fmt(x: float) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return repr(float(x))


@dataclass
class SweepTable:
    rows: list[SweepRow] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def row(self, K: int, lam: int, decoder: str, quantizer: str) -> SweepRow:
        for r in self.rows:
            if (r.K, r.lam, r.decoder, r.quantizer) == (K, lam, decoder, quantizer):
                return r
        raise KeyError((K, lam, decoder, quantizer))

    def to_csv(self, extended: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER + (["max_amp_l2"] if extended else []))
        for r in self.rows:
            w.writerow(r.csv_values() + ([_fmt(r.max_amp_l2)] if extended else []))
        return buf.getvalue()

    def write(self, path, extended: bool = False) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv(extended))
        with open(f"{path}.meta.json", "w") as fh:
            json.dump(self.metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, trial]))


def generate_measure(delta: float, rng: np.random.Generator) -> AtomicMeasure:
    """Random delta-separated measure with unit total variation.

    Starts at 0 and ``delta``, then steps by ``delta + |eta|`` with eta
    ~ N(0, delta^2) until the next point would pass ``1 - delta``.  Amplitudes
    have modulus 1/S and uniform random phases.
    """
    if not 0 < delta < 1 / 3:
        raise ParameterError(f"delta must lie in (0, 1/3), got {delta}")
    t = [0.0, delta]
    while True:
        nxt = t[-1] + delta + abs(rng.normal(0.0, delta))
        if nxt > 1 - delta:
            break
        t.append(nxt)
    S = len(t)
    phases = rng.uniform(0.0, 1.0, S)
    return AtomicMeasure(np.array(t), np.exp(2j * np.pi * phases) / S)


def _decode(decoder: str, yv: np.ndarray, S: int, spec: TrialSpec, tau: float) -> AtomicMeasure:
    m = yv.size
    if decoder == "esprit":
        return esprit(yv, EspritConfig(m, S, strict=False))
    cfg = BlassoConfig(
        m=m,
        tau=tau,
        grid_size=spec.grid_factor * m,
        max_iter=spec.max_iter,
        prune_threshold=spec.prune_ratio * tau,
        refine=spec.refine,
    )
    return blasso_grid(yv, cfg)


def run_trial(K: int, lam: int, decoder: str, quantizer: str, mu: AtomicMeasure,
              spec: TrialSpec | None = None) -> ErrorReport:
    """Encode F_M mu, decode, and score against mu.  Decoder failures give an all-inf report."""
    spec = spec or TrialSpec()
    m = spec.condensed_size(decoder)
    qcfg = QuantizerConfig.for_condensed_size(m, lam, K, spec.A)
    y = fourier_coefficients(mu, qcfg.M)
    tau = spec.tau if spec.tau is not None else qcfg.eps_v / 2
    try:
        if quantizer == "beta":
            stream = beta_quantize(y, qcfg)
            nu = _decode(decoder, condense(stream.q, qcfg), mu.size, spec, tau)
            est = reweight_decode(nu, qcfg)
        elif quantizer == "msq":
            q = msq_quantize(y, qcfg.alphabet)
            # raw samples go straight to the decoder; noise level is that of M samples
            yv = q if spec.msq_all_samples else q[:m]
            if spec.tau is None:
                tau = math.sqrt(2 * yv.size) * qcfg.delta / 2
            est = _decode(decoder, yv, mu.size, spec, tau)
        else:
            raise ParameterError(f"unknown quantizer {quantizer!r}")
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        log.info("trial failed (K=%d, lambda=%d, %s/%s): %s", K, lam, decoder, quantizer, exc)
        return ErrorReport.failed()
    return error_report(mu, est, m)


def _trial_job(args) -> list[tuple[tuple, ErrorReport]]:
    spec, trial, K, lam = args
    mu = generate_measure(spec.delta, trial_rng(spec.seed, trial))
    out = []
    for decoder in spec.decoders:
        for quantizer in spec.quantizers:
            out.append(((K, lam, decoder, quantizer), run_trial(K, lam, decoder, quantizer, mu, spec)))
    return out


def _max(values: Iterable[float | None]) -> float:
    vals = [v for v in values if v is not None]
    return max(vals) if vals else math.nan


def _aggregate(key, reports: Sequence[ErrorReport], guide: float | None = None) -> SweepRow:
    K, lam, decoder, quantizer = key
    failures = sum(1 for r in reports if math.isinf(r.e1))
    return SweepRow(
        K=K, lam=lam, decoder=decoder, quantizer=quantizer, n_trials=len(reports),
        failures=failures,
        max_e1=_max(r.e1 for r in reports),
        max_e2=_max(r.e2 for r in reports),
        max_e3=_max(r.e3 for r in reports),
        max_elip_upper=_max(r.e_lip_upper for r in reports),
        max_einf2=_max(r.e_inf2 for r in reports),
        guide=guide_value(decoder, K, lam) if guide is None else guide,
        max_amp_l2=_max(r.amp_l2 for r in reports),
    )


def worker_count() -> int:
    env = os.environ.get("SPECRES_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _metadata(spec: TrialSpec) -> dict:
    meta = asdict(spec)
    meta["m_tvmin"] = spec.condensed_size("tvmin")
    meta["m_esprit"] = spec.condensed_size("esprit")
    meta["gaussian_sampler"] = "numpy PCG64 ziggurat"
    meta["aggregation"] = "max over trials"
    return meta


def sweep(spec: TrialSpec, workers: int | None = None) -> SweepTable:
    """Run every (K, lambda) for all decoder/quantizer combinations and keep maxima."""
    jobs = [(spec, trial, K, lam) for K in spec.k_list for lam in spec.lambda_list
            for trial in range(spec.trials)]
    workers = worker_count() if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_trial_job(job) for job in jobs]
    collected: dict[tuple, list[ErrorReport]] = {}
    for chunk in results:
        for key, rep in chunk:
            collected.setdefault(key, []).append(rep)
    rows = []
    for K in spec.k_list:
        for lam in spec.lambda_list:
            for decoder in spec.decoders:
                for quantizer in spec.quantizers:
                    key = (K, lam, decoder, quantizer)
                    rows.append(_aggregate(key, collected[key]))
    return SweepTable(rows, _metadata(spec))


def oracle_trial(K: int, lam: int, quantizer: str, mu: AtomicMeasure, spec: TrialSpec) -> ErrorReport:
    """Least-squares amplitudes on the true support from quantized data."""
    m = spec.m
    qcfg = QuantizerConfig.for_condensed_size(m, lam, K, spec.A)
    y = fourier_coefficients(mu, qcfg.M)
    if quantizer == "msq":
        a = least_squares_amplitudes(msq_quantize(y, qcfg.alphabet), mu.locations)
        est = AtomicMeasure(mu.locations, a)
    else:
        yv = condense(beta_quantize(y, qcfg).q, qcfg)
        est = reweight_decode(AtomicMeasure(mu.locations, least_squares_amplitudes(yv, mu.locations)), qcfg)
    return error_report(mu, est, m)


def msq_floor_experiment(spec: TrialSpec) -> SweepTable:
    """Amplitude error of oracle-support least squares on MSQ (and beta) data.

    MSQ uses all M samples; rows carry decoder name ``oracle``.
    """
    collected: dict[tuple, list[ErrorReport]] = {}
    for trial in range(spec.trials):
        mu = generate_measure(spec.delta, trial_rng(spec.seed, trial))
        for K in spec.k_list:
            for lam in spec.lambda_list:
                for quantizer in spec.quantizers:
                    key = (K, lam, "oracle", quantizer)
                    collected.setdefault(key, []).append(oracle_trial(K, lam, quantizer, mu, spec))
    rows = []
    for K in spec.k_list:
        for lam in spec.lambda_list:
            for quantizer in spec.quantizers:
                key = (K, lam, "oracle", quantizer)
                rows.append(_aggregate(key, collected[key], guide=math.nan))
    meta = _metadata(spec)
    meta["experiment"] = "oracle-support least squares"
    return SweepTable(rows, meta)


def log_log_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def log_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log y against x."""
    return float(np.polyfit(np.asarray(x, float), np.log(np.asarray(y, float)), 1)[0])
