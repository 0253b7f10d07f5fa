"""Atomic measures on the torus [0, 1) and the structured matrices built from them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class ParameterError(ValueError):
    """Raised when an operation receives inconsistent sizes or parameters."""


class DuplicateLocationError(ValueError):
    """Raised when two atoms of a measure share a location."""


def torus_distance(s, t):
    """Distance on the unit torus, min over integers n of |s - t - n|.

    Works elementwise on arrays.
    """
    d = np.mod(np.asarray(s, dtype=float) - np.asarray(t, dtype=float), 1.0)
    return np.minimum(d, 1.0 - d)


def min_separation(locations: Iterable[float]) -> float:
    """Smallest pairwise torus distance; ``inf`` for fewer than two points."""
    t = np.sort(np.mod(np.asarray(list(locations), dtype=float), 1.0))
    if t.size < 2:
        return float("inf")
    gaps = np.diff(np.append(t, t[0] + 1.0))
    return float(np.min(np.minimum(gaps, 1.0 - gaps)))


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite sum of weighted Dirac masses on [0, 1).

    Locations are reduced mod 1 and sorted on construction; amplitudes follow
    their atoms.
    """

    locations: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        t = np.mod(np.atleast_1d(np.asarray(self.locations, dtype=float)), 1.0)
        a = np.atleast_1d(np.asarray(self.amplitudes, dtype=complex))
        if t.ndim != 1 or t.shape != a.shape:
            raise ParameterError(
                f"locations {t.shape} and amplitudes {a.shape} must be matching 1-d arrays"
            )
        # values like 1 - 1e-17 wrap to exactly 1.0
        t[t >= 1.0] = 0.0
        order = np.argsort(t, kind="stable")
        t, a = t[order], a[order]
        if t.size > 1 and np.any(np.diff(t) == 0.0):
            raise DuplicateLocationError("atom locations must be distinct")
        t.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "locations", t)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[float, complex]]) -> "AtomicMeasure":
        atoms = list(atoms)
        if not atoms:
            return cls.zero()
        t, a = zip(*atoms)
        return cls(np.array(t, dtype=float), np.array(a, dtype=complex))

    @classmethod
    def zero(cls) -> "AtomicMeasure":
        return cls(np.zeros(0), np.zeros(0, dtype=complex))

    @property
    def size(self) -> int:
        """Number of atoms."""
        return int(self.locations.size)

    def __len__(self) -> int:
        return self.size

    def atoms(self) -> list[tuple[float, complex]]:
        return list(zip(self.locations.tolist(), self.amplitudes.tolist()))

    def total_variation(self) -> float:
        return float(np.sum(np.abs(self.amplitudes)))

    def min_separation(self) -> float:
        return min_separation(self.locations)

    def scaled(self, factor: complex) -> "AtomicMeasure":
        return AtomicMeasure(self.locations, self.amplitudes * factor)

    def multiply(self, func) -> "AtomicMeasure":
        """Pointwise product with a function, i.e. amplitudes a_j * f(t_j)."""
        return AtomicMeasure(self.locations, self.amplitudes * func(self.locations))

    def __add__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        # coincident atoms are merged, which is what measure addition means
        t = np.concatenate([self.locations, other.locations])
        a = np.concatenate([self.amplitudes, other.amplitudes])
        uniq, inv = np.unique(t, return_inverse=True)
        merged = np.zeros(uniq.size, dtype=complex)
        np.add.at(merged, inv, a)
        return AtomicMeasure(uniq, merged)


def fourier_coefficients(measure: AtomicMeasure, M: int) -> np.ndarray:
    """First ``M`` Fourier coefficients, entry k = sum_j a_j exp(-2 pi i k t_j)."""
    if M < 1:
        raise ParameterError(f"M must be >= 1, got {M}")
    return vandermonde(measure.locations, M) @ measure.amplitudes


def vandermonde(locations: Sequence[float], M: int) -> np.ndarray:
    """Fourier matrix with entry (j, k) = exp(-2 pi i j t_k), shape (M, S)."""
    if M < 1:
        raise ParameterError(f"M must be >= 1, got {M}")
    t = np.asarray(locations, dtype=float)
    j = np.arange(M)[:, None]
    return np.exp(-2j * np.pi * j * t[None, :])


def hankel(u: Sequence[complex], N: int) -> np.ndarray:
    """Hankel matrix with entry (j, k) = u[j + k], shape (N, M - N + 1)."""
    u = np.asarray(u, dtype=complex)
    M = u.size
    if not 1 <= N <= M:
        raise ParameterError(f"Hankel height N={N} must satisfy 1 <= N <= {M}")
    idx = np.arange(N)[:, None] + np.arange(M - N + 1)[None, :]
    return u[idx]
