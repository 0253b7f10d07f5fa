"""Plain-text formats for measures, sample vectors and quantized streams."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .measure import AtomicMeasure, ParameterError
from .noise_shaping import QuantizedStream, QuantizerConfig


def _header_fields(lines: list[str]) -> dict[str, str]:
    fields = {}
    for line in lines:
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    fields[k] = v
    return fields


def _data_rows(lines: list[str]) -> np.ndarray:
    rows = [line.split() for line in lines if line.strip() and not line.startswith("#")]
    if not rows:
        return np.zeros((0, 0))
    return np.array(rows, dtype=float)


def format_measure(measure: AtomicMeasure) -> str:
    out = [f"# atoms={measure.size}"]
    for t, a in measure.atoms():
        out.append(f"{t:.17g} {a.real:.17g} {a.imag:.17g}")
    return "\n".join(out) + "\n"


def parse_measure(text: str) -> AtomicMeasure:
    lines = text.splitlines()
    data = _data_rows(lines)
    declared = _header_fields(lines).get("atoms")
    if data.size == 0:
        measure = AtomicMeasure.zero()
    else:
        if data.shape[1] != 3:
            raise ParameterError("measure lines must read 't re im'")
        measure = AtomicMeasure(data[:, 0], data[:, 1] + 1j * data[:, 2])
    if declared is not None and int(declared) != measure.size:
        raise ParameterError(f"header declares {declared} atoms, found {measure.size}")
    return measure


def format_samples(values, header: str | None = None) -> str:
    values = np.asarray(values, dtype=complex)
    out = [f"# {header}"] if header else []
    out += [f"{v.real:.17g} {v.imag:.17g}" for v in values]
    return "\n".join(out) + "\n"


def parse_samples(text: str) -> np.ndarray:
    data = _data_rows(text.splitlines())
    if data.size == 0:
        return np.zeros(0, dtype=complex)
    if data.shape[1] == 1:
        return data[:, 0].astype(complex)
    return data[:, 0] + 1j * data[:, 1]


def format_stream(stream: QuantizedStream, cfg: QuantizerConfig) -> str:
    header = (
        f"M={cfg.M} lambda={cfg.lam} K={cfg.K} A={cfg.A!r} beta={cfg.beta!r} "
        f"delta={cfg.delta!r} method={stream.method}"
    )
    return format_samples(stream.q, header)


def parse_stream(text: str) -> tuple[QuantizedStream, QuantizerConfig]:
    """Read a quantized stream; the state ``u`` is not stored and comes back as NaN."""
    lines = text.splitlines()
    f = _header_fields(lines)
    try:
        cfg = QuantizerConfig(
            M=int(f["M"]), lam=int(f["lambda"]), K=int(f["K"]), A=float(f["A"]),
            beta=float(f["beta"]), delta=float(f["delta"]),
        )
    except KeyError as exc:
        raise ParameterError(f"stream header is missing {exc.args[0]!r}") from None
    q = parse_samples(text)
    if q.size != cfg.M:
        raise ParameterError(f"header declares M={cfg.M}, found {q.size} samples")
    return QuantizedStream(q, np.full(cfg.M, np.nan + 0j), f.get("method", "beta")), cfg


def load_config(path) -> dict:
    """Quantizer settings from JSON with keys M, lambda, K, A."""
    data = json.loads(Path(path).read_text())
    unknown = set(data) - {"M", "lambda", "K", "A"}
    if unknown:
        raise ParameterError(f"unknown config keys: {sorted(unknown)}")
    return data
