"""Distortion functionals between atomic measures.

``errors_e123`` groups the atoms of an estimate around each reference atom
(radius 0.3298/(M-1)) and reports amplitude, localization and stray-mass
errors.  ``error_inf2`` compares equal-size measures under the permutation that
minimizes the worst location mismatch.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .measure import AtomicMeasure, torus_distance

log = logging.getLogger(__name__)

NEIGHBORHOOD_CONSTANT = 0.3298
BRUTE_FORCE_MAX_ATOMS = 10


def neighborhood_radius(M: int) -> float:
    return NEIGHBORHOOD_CONSTANT / (M - 1)


def neighborhood_partition(rho: AtomicMeasure, nu: AtomicMeasure, M: int):
    """Index sets of ``nu``'s atoms near each atom of ``rho``, plus the leftovers.

    Returns ``(groups, residual)`` where ``groups[j]`` lists indices k of ``nu``
    with |r_j - s_k| <= 0.3298/(M-1) and ``residual`` lists the rest.
    """
    if M < 2:
        raise ValueError(f"M must be >= 2, got {M}")
    if rho.size >= 2 and rho.min_separation() * M < 1:
        log.warning("reference separation below 1/M; neighborhoods may overlap")
    radius = neighborhood_radius(M)
    if rho.size == 0 or nu.size == 0:
        return [[] for _ in range(rho.size)], list(range(nu.size))
    near = torus_distance(rho.locations[:, None], nu.locations[None, :]) <= radius
    groups = [np.flatnonzero(row).tolist() for row in near]
    residual = np.flatnonzero(~near.any(axis=0)).tolist()
    return groups, residual


def errors_e123(rho: AtomicMeasure, nu: AtomicMeasure, M: int) -> tuple[float, float, float]:
    groups, residual = neighborhood_partition(rho, nu, M)
    v, s = nu.amplitudes, nu.locations
    e1 = 0.0
    e2 = 0.0
    for j, idx in enumerate(groups):
        e1 = max(e1, abs(rho.amplitudes[j] - v[idx].sum()))
        d = torus_distance(rho.locations[j], s[idx])
        e2 += float(np.sum(np.abs(v[idx]) * d**2))
    e3 = float(np.sum(np.abs(v[residual])))
    return float(e1), e2, e3


def e_lip_upper(rho: AtomicMeasure, nu: AtomicMeasure, M: int) -> float:
    """Upper bound R e1 + ||nu||_TV^(1/2) e2^(1/2) + e3 on the Lipschitz-dual distance."""
    e1, e2, e3 = errors_e123(rho, nu, M)
    return rho.size * e1 + math.sqrt(nu.total_variation() * e2) + e3


def lipschitz_pairing(measure: AtomicMeasure, phi) -> complex:
    """Integral of a test function against the measure, sum_j a_j phi(t_j)."""
    return complex(np.sum(measure.amplitudes * phi(measure.locations)))


def random_lipschitz_function(rng: np.random.Generator, knots: int = 12):
    """Random periodic piecewise-linear phi with sup norm and slope both <= 1.

    Values are complex; real and imaginary parts are built with a common
    unimodular scale so the modulus of every difference quotient stays <= 1.
    """
    x = np.sort(rng.uniform(0, 1, knots))
    steps = rng.uniform(-1, 1, knots) * np.diff(np.append(x, x[0] + 1))
    # close the loop: increments must sum to zero on the torus
    steps -= steps.mean()
    h = np.concatenate([[0.0], np.cumsum(steps[:-1])])
    h -= (h.max() + h.min()) / 2
    slope = np.max(np.abs(steps / np.diff(np.append(x, x[0] + 1))))
    scale = min(1.0, 1.0 / max(slope, 1e-300), 1.0 / max(np.max(np.abs(h)), 1e-300))
    phase = np.exp(2j * np.pi * rng.uniform())
    xp = np.concatenate([x - 1, x, x + 1])
    hp = np.tile(h, 3) * scale

    def phi(t):
        return phase * np.interp(np.mod(t, 1.0), xp, hp)

    return phi


def e_lip_lower(rho: AtomicMeasure, nu: AtomicMeasure, rng: np.random.Generator, n: int = 100) -> float:
    """Monte-Carlo lower certificate: best |int phi d(rho - nu)| over random test functions."""
    best = 0.0
    for _ in range(n):
        phi = random_lipschitz_function(rng)
        best = max(best, abs(lipschitz_pairing(rho, phi) - lipschitz_pairing(nu, phi)))
    return best


def _brute_force_matching(r, s, u, v) -> tuple[int, ...]:
    S = r.size
    D = torus_distance(r[:, None], s[None, :])
    best_key, best = None, None
    for perm in itertools.permutations(range(S)):
        p = list(perm)
        key = (float(D[range(S), p].max()), float(np.linalg.norm(u - v[p])), perm)
        if best_key is None or key < best_key:
            best_key, best = key, perm
    return best


def _rotation_matching(r, s, u, v) -> tuple[int, ...]:
    # both supports are sorted; try every cyclic alignment
    S = r.size
    best_key, best = None, None
    for shift in range(S):
        p = [(j + shift) % S for j in range(S)]
        key = (
            float(torus_distance(r, s[p]).max()),
            float(np.linalg.norm(u - v[p])),
            tuple(p),
        )
        if best_key is None or key < best_key:
            best_key, best = key, tuple(p)
    return best


def optimal_matching(rho: AtomicMeasure, nu: AtomicMeasure, brute_force: bool | None = None):
    """Permutation pi minimizing max_j |r_j - s_pi(j)|.

    Ties go to the smaller l2 amplitude error, then lexicographic order.
    Above ``BRUTE_FORCE_MAX_ATOMS`` atoms cyclic alignment of the sorted
    supports is used unless ``brute_force`` is forced.
    """
    if rho.size != nu.size:
        return None
    if brute_force is None:
        brute_force = rho.size <= BRUTE_FORCE_MAX_ATOMS
    args = (rho.locations, nu.locations, rho.amplitudes, nu.amplitudes)
    return _brute_force_matching(*args) if brute_force else _rotation_matching(*args)


def error_inf2(rho: AtomicMeasure, nu: AtomicMeasure, brute_force: bool | None = None):
    """Matched support error plus relative l2 amplitude error.

    Returns ``(value, permutation)``, or ``(None, None)`` when atom counts differ.
    """
    perm = optimal_matching(rho, nu, brute_force)
    if perm is None:
        return None, None
    if rho.size == 0:
        return 0.0, ()
    p = list(perm)
    support = float(torus_distance(rho.locations, nu.locations[p]).max())
    amp = float(np.linalg.norm(rho.amplitudes - nu.amplitudes[p]) / np.linalg.norm(rho.amplitudes))
    return support + amp, perm


def amplitude_l2_error(rho: AtomicMeasure, nu: AtomicMeasure) -> float | None:
    """Unnormalized ||u - v_pi||_2 under the optimal matching; None on size mismatch."""
    perm = optimal_matching(rho, nu)
    if perm is None:
        return None
    return float(np.linalg.norm(rho.amplitudes - nu.amplitudes[list(perm)]))


@dataclass(frozen=True)
class ErrorReport:
    e1: float
    e2: float
    e3: float
    e_lip_upper: float
    e_inf2: float | None = None
    amp_l2: float | None = None
    matched_permutation: tuple[int, ...] | None = None

    CSV_FIELDS = ("e1", "e2", "e3", "elip_upper", "einf2")

    def to_csv(self) -> str:
        vals = [self.e1, self.e2, self.e3, self.e_lip_upper, self.e_inf2]
        return ",".join("nan" if x is None else repr(float(x)) for x in vals)

    @classmethod
    def failed(cls) -> "ErrorReport":
        inf = math.inf
        return cls(inf, inf, inf, inf, inf, inf)


def error_report(rho: AtomicMeasure, nu: AtomicMeasure, M: int) -> ErrorReport:
    """Every distortion of estimate ``nu`` against reference ``rho``."""
    e1, e2, e3 = errors_e123(rho, nu, M)
    elip = rho.size * e1 + math.sqrt(nu.total_variation() * e2) + e3
    einf2, perm = error_inf2(rho, nu)
    amp = None
    if perm is not None:
        amp = float(np.linalg.norm(rho.amplitudes - nu.amplitudes[list(perm)]))
    return ErrorReport(e1, e2, e3, elip, einf2, amp, perm)
