"""Beta noise-shaping quantization of Fourier samples, and the MSQ baseline.

The quantizer runs a block-delayed error feedback with gain ``beta`` over
``lam`` blocks of length ``m``.  Its output satisfies ``y - q = H u`` where
``H`` has identity blocks on the diagonal and ``-beta * I`` below it, while the
condensation map ``V = [I, I/beta, ..., I/beta**(lam-1)]`` nearly annihilates
``H``.  Neither matrix is formed here; both are applied by index arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .measure import AtomicMeasure, ParameterError


class InputRangeError(ValueError):
    """Raised when ``max |y_k|`` exceeds the configured bound ``A``."""


# relative slack on the range check, covers round-off in sum_j |a_j| = A
_RANGE_SLACK = 1e-12


def choose_parameters(K: int, lam: int, A: float) -> tuple[float, float]:
    """Default gain and alphabet spacing: beta = K(lam+1)/(lam+2), delta = (lam+2)A/K."""
    if K < 2:
        raise ParameterError(f"K must be >= 2, got {K}")
    if lam < 1:
        raise ParameterError(f"lambda must be >= 1, got {lam}")
    if not A > 0:
        raise ParameterError(f"A must be positive, got {A}")
    beta = K * (lam + 1) / (lam + 2)
    delta = (lam + 2) * A / K
    return beta, delta


@dataclass(frozen=True)
class Alphabet:
    """Real levels delta * {-K+1, -K+3, ..., K-1}; the complex alphabet is its square."""

    K: int
    delta: float

    def __post_init__(self):
        if self.K < 2:
            raise ParameterError(f"K must be >= 2, got {self.K}")
        if not self.delta > 0:
            raise ParameterError(f"delta must be positive, got {self.delta}")

    @property
    def levels(self) -> np.ndarray:
        return self.delta * np.arange(-self.K + 1, self.K, 2, dtype=float)

    def round_real(self, x) -> np.ndarray:
        # level index i has value delta*(2i - K + 1); ceil(v - 1/2) sends ties down
        v = (np.asarray(x, dtype=float) / self.delta + self.K - 1) / 2
        idx = np.clip(np.ceil(v - 0.5), 0, self.K - 1)
        return self.delta * (2 * idx - self.K + 1)

    def round(self, c) -> np.ndarray:
        """Nearest complex alphabet element, real and imaginary parts independently."""
        c = np.asarray(c, dtype=complex)
        return self.round_real(c.real) + 1j * self.round_real(c.imag)


def round_to_alphabet(c, alphabet: Alphabet):
    return alphabet.round(c)


@dataclass(frozen=True)
class QuantizerConfig:
    """System parameters of the beta quantizer.

    Build with :meth:`from_rule` for the default choice of ``beta`` and
    ``delta``; the direct constructor accepts any pair obeying
    ``beta + A/delta <= K``.
    """

    M: int
    lam: int
    K: int
    A: float
    beta: float
    delta: float
    m: int = field(init=False)

    def __post_init__(self):
        if self.lam < 1:
            raise ParameterError(f"lambda must be >= 1, got {self.lam}")
        if self.K < 2:
            raise ParameterError(f"K must be >= 2, got {self.K}")
        if self.M < 1 or self.M % self.lam:
            raise ParameterError(f"M={self.M} must be a positive multiple of lambda={self.lam}")
        if not (self.A > 0 and self.delta > 0):
            raise ParameterError("A and delta must be positive")
        if not 1 < self.beta < self.K:
            raise ParameterError(f"beta={self.beta} must lie in (1, K={self.K})")
        if self.beta + self.A / self.delta > self.K * (1 + 1e-12):
            raise ParameterError("stability condition beta + A/delta <= K violated")
        object.__setattr__(self, "m", self.M // self.lam)

    @classmethod
    def from_rule(cls, M: int, lam: int, K: int, A: float = 1.0) -> "QuantizerConfig":
        beta, delta = choose_parameters(K, lam, A)
        return cls(M=M, lam=lam, K=K, A=A, beta=beta, delta=delta)

    @classmethod
    def for_condensed_size(cls, m: int, lam: int, K: int, A: float = 1.0) -> "QuantizerConfig":
        return cls.from_rule(m * lam, lam, K, A)

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.K, self.delta)

    @property
    def eps_v(self) -> float:
        """Guaranteed bound on ||V y - V q||_2, sqrt(2m) beta^(1-lam) delta."""
        return math.sqrt(2 * self.m) * self.beta ** (1 - self.lam) * self.delta

    @property
    def c_beta(self) -> float:
        """Upper bound on |w_m| and on 1/|w_m|."""
        return (1 + 1 / self.beta) / (1 - 1 / self.beta)

    @property
    def lipschitz_bound(self) -> float:
        """Bound 4 pi lam beta / (beta-1)^2 on the Lipschitz constant of w and 1/w."""
        return 4 * math.pi * self.lam * self.beta / (self.beta - 1) ** 2


@dataclass(frozen=True)
class QuantizedStream:
    """Quantizer output ``q`` with the state ``u`` certifying ``y - q = H u``.

    For MSQ output ``u = y - q`` and ``H`` is the identity.
    """

    q: np.ndarray
    u: np.ndarray
    method: str = "beta"


def _check_range(y: np.ndarray, A: float) -> None:
    peak = float(np.max(np.abs(y))) if y.size else 0.0
    if peak > A * (1 + _RANGE_SLACK):
        raise InputRangeError(f"max |y_k| = {peak:.6g} exceeds A = {A:.6g}")


def beta_quantize(y, cfg: QuantizerConfig) -> QuantizedStream:
    """Noise-shaping quantization of ``y`` with block feedback ``beta * u[k - m]``.

    Raises:
        ParameterError: ``len(y) != cfg.M``.
        InputRangeError: ``max |y_k| > cfg.A``; stability would not be guaranteed.
    """
    y = np.asarray(y, dtype=complex)
    if y.shape != (cfg.M,):
        raise ParameterError(f"expected {cfg.M} samples, got shape {y.shape}")
    _check_range(y, cfg.A)
    alphabet = cfg.alphabet
    blocks = y.reshape(cfg.lam, cfg.m)
    q = np.empty_like(blocks)
    u = np.empty_like(blocks)
    carry = np.zeros(cfg.m, dtype=complex)
    # sequential over blocks, vectorized over the m residue classes
    for b in range(cfg.lam):
        target = blocks[b] + cfg.beta * carry
        q[b] = alphabet.round(target)
        u[b] = target - q[b]
        carry = u[b]
    return QuantizedStream(q.reshape(-1), u.reshape(-1), "beta")


def msq_quantize(y, alphabet: Alphabet) -> np.ndarray:
    """Memoryless rounding of each sample to the alphabet."""
    return alphabet.round(np.asarray(y, dtype=complex))


def msq_stream(y, alphabet: Alphabet) -> QuantizedStream:
    y = np.asarray(y, dtype=complex)
    q = msq_quantize(y, alphabet)
    return QuantizedStream(q, y - q, "msq")


def condense(x, cfg: QuantizerConfig) -> np.ndarray:
    """Apply V: entry l is sum_k beta^(-k) x[m k + l]."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (cfg.M,):
        raise ParameterError(f"expected {cfg.M} samples, got shape {x.shape}")
    scale = cfg.beta ** -np.arange(cfg.lam, dtype=float)
    return scale @ x.reshape(cfg.lam, cfg.m)


def noise_transfer_apply(u, cfg: QuantizerConfig) -> np.ndarray:
    """Apply H: (Hu)[k] = u[k] - beta u[k - m] for k >= m, u[k] otherwise."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (cfg.M,):
        raise ParameterError(f"expected {cfg.M} samples, got shape {u.shape}")
    out = u.copy()
    out[cfg.m:] -= cfg.beta * u[: cfg.M - cfg.m]
    return out


def weight(t, cfg: QuantizerConfig):
    """w_m(t) = w(m t) with w(s) = (1 - beta^-lam e^{-2 pi i lam s}) / (1 - beta^-1 e^{-2 pi i s})."""
    z = np.exp(-2j * np.pi * cfg.m * np.asarray(t, dtype=float))
    return (1 - cfg.beta ** -cfg.lam * z ** cfg.lam) / (1 - z / cfg.beta)


def reweight_decode(nu: AtomicMeasure, cfg: QuantizerConfig) -> AtomicMeasure:
    """Divide each amplitude by w_m at its location; the support is unchanged."""
    return AtomicMeasure(nu.locations, nu.amplitudes / weight(nu.locations, cfg))


def reweight_encode(mu: AtomicMeasure, cfg: QuantizerConfig) -> AtomicMeasure:
    """The measure w_m * mu, whose first m Fourier coefficients are V F_M mu."""
    return mu.multiply(lambda t: weight(t, cfg))
