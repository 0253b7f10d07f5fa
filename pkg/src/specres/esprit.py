"""ESPRIT line-spectrum decoder, plain and composed with the beta quantizer."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .measure import AtomicMeasure, ParameterError, hankel, vandermonde
from .noise_shaping import QuantizedStream, QuantizerConfig, condense, reweight_decode

log = logging.getLogger(__name__)

# singular values below this fraction of sigma_1 count as zero
RANK_RTOL = 1e-12
# recovered locations closer than this are pushed apart before least squares
_MERGE_TOL = 1e-12
# pseudo-inverse cutoff for amplitudes; columns split by _MERGE_TOL fall below it
AMPLITUDE_RCOND = 1e-8


class DegenerateInputError(ValueError):
    """The data do not carry S independent spectral components."""


class NumericalFailure(RuntimeError):
    """A subspace step was too ill-conditioned to continue."""


@dataclass(frozen=True)
class EspritConfig:
    m: int
    S: int
    n: int | None = None
    strict: bool = True

    def __post_init__(self):
        if self.n is None:
            object.__setattr__(self, "n", self.m // 2 + 1)
        if self.S < 1:
            raise ParameterError(f"S must be >= 1, got {self.S}")
        if not self.S <= self.n - 1 <= self.m - self.S:
            raise ParameterError(
                f"need S <= n-1 <= m-S, got S={self.S}, n={self.n}, m={self.m}"
            )
        # even m and m >= 8S are what the error guarantee assumes
        if self.strict and (self.m % 2 or self.m < 8 * self.S):
            raise ParameterError(f"need even m >= 8S, got m={self.m}, S={self.S}")


def esprit_locations(yv, cfg: EspritConfig) -> np.ndarray:
    """Support estimate: arguments of the eigenvalues of pinv(U0) @ U1."""
    H = hankel(yv, cfg.n)
    U, s, _ = np.linalg.svd(H, full_matrices=False)
    if s[0] == 0.0 or s[cfg.S - 1] < RANK_RTOL * s[0]:
        raise DegenerateInputError(
            f"sigma_S/sigma_1 = {s[cfg.S - 1] / s[0] if s[0] else 0.0:.3g} below {RANK_RTOL}"
        )
    Us = U[:, : cfg.S]
    U0, U1 = Us[:-1], Us[1:]
    s0 = np.linalg.svd(U0, compute_uv=False)
    if s0[-1] < RANK_RTOL * s0[0]:
        raise NumericalFailure("upper shifted signal subspace is rank deficient")
    psi = np.linalg.lstsq(U0, U1, rcond=None)[0]
    z = np.linalg.eigvals(psi)
    # column convention exp(-2 pi i j t) makes the eigenvalues exp(-2 pi i t)
    return np.mod(-np.angle(z) / (2 * np.pi), 1.0)


def _separate(t: np.ndarray) -> np.ndarray:
    t = np.mod(t, 1.0)
    t[t >= 1.0] = 0.0
    t = np.sort(t)
    for j in range(1, t.size):
        if t[j] - t[j - 1] < _MERGE_TOL:
            log.info("separating coincident ESPRIT locations at %.17g", t[j])
            t[j] = t[j - 1] + _MERGE_TOL
    if t.size > 1 and t[0] + 1.0 - t[-1] < _MERGE_TOL:
        log.info("separating coincident ESPRIT locations across 0")
        t[-1] = t[0] + 1.0 - _MERGE_TOL
    t = np.mod(t, 1.0)
    t[t >= 1.0] = 0.0
    return t


def least_squares_amplitudes(yv, locations, rcond: float = AMPLITUDE_RCOND) -> np.ndarray:
    """Amplitudes pinv(Phi_m(T)) @ yv for a fixed support.

    Singular values below ``rcond * sigma_1`` are dropped, so numerically
    coincident locations share the minimum-norm split of their mass.
    """
    yv = np.asarray(yv, dtype=complex)
    Phi = vandermonde(locations, yv.size)
    return np.linalg.lstsq(Phi, yv, rcond=rcond)[0]


def esprit(yv, cfg: EspritConfig) -> AtomicMeasure:
    """Recover an S-atom measure from its first m (noisy) Fourier coefficients.

    Raises:
        DegenerateInputError: fewer than S significant singular values.
        NumericalFailure: the shift-invariance system cannot be solved.
    """
    yv = np.asarray(yv, dtype=complex)
    if yv.shape != (cfg.m,):
        raise ParameterError(f"expected {cfg.m} samples, got shape {yv.shape}")
    t = esprit_locations(yv, cfg)
    t = _separate(t)
    a = least_squares_amplitudes(yv, t)
    return AtomicMeasure(t, a)


def noise_condition_holds(qcfg: QuantizerConfig, S: int, B: float) -> bool:
    """Whether (lam+1) K^-lam <= B / (3200 e A S^2 m^1.5), the guarantee's noise regime."""
    lhs = (qcfg.lam + 1) * qcfg.K ** (-qcfg.lam)
    return lhs <= B / (3200 * math.e * qcfg.A * S**2 * qcfg.m**1.5)


def esprit_decode_quantized(
    stream: QuantizedStream,
    qcfg: QuantizerConfig,
    S: int,
    B: float | None = None,
    strict: bool = True,
) -> AtomicMeasure:
    """Condense, run ESPRIT on the m condensed samples, then undo the weighting."""
    if B is not None and not noise_condition_holds(qcfg, S, B):
        log.warning(
            "K=%d, lambda=%d lies outside the proven ESPRIT noise regime", qcfg.K, qcfg.lam
        )
    nu = esprit(condense(stream.q, qcfg), EspritConfig(qcfg.m, S, strict=strict))
    return reweight_decode(nu, qcfg)
