"""Grid-discretized BLASSO decoder with local location refinement.

Solves ``min_x tau ||x||_1 + 1/2 ||y - Phi x||^2`` over complex amplitudes on
the grid ``j / G`` with a monotone FISTA iteration, groups the support into
clusters of neighbouring grid points, drops clusters of small total mass, then
slides each surviving cluster to a continuous location.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .measure import AtomicMeasure, ParameterError, vandermonde
from .noise_shaping import QuantizedStream, QuantizerConfig, condense, reweight_decode

log = logging.getLogger(__name__)

_GOLDEN = (math.sqrt(5) - 1) / 2
# support points closer than this fraction of 1/m are treated as one atom,
# which is below what m samples can resolve
CLUSTER_WIDTH = 0.5


@dataclass(frozen=True)
class BlassoConfig:
    """Solver settings.  ``grid_size`` defaults to 16 m, ``prune_threshold`` to tau / 10."""

    m: int
    tau: float
    grid_size: int | None = None
    max_iter: int = 50_000
    tol: float = 1e-10
    prune_threshold: float | None = None
    refine: bool = True
    refine_passes: int = 2
    debug: bool = False

    def __post_init__(self):
        if self.grid_size is None:
            object.__setattr__(self, "grid_size", 16 * self.m)
        if self.prune_threshold is None:
            object.__setattr__(self, "prune_threshold", self.tau / 10)
        if self.m < 1:
            raise ParameterError(f"m must be >= 1, got {self.m}")
        if not self.tau > 0:
            raise ParameterError(f"tau must be positive, got {self.tau}")
        if self.grid_size < 8 * self.m:
            raise ParameterError(f"grid_size={self.grid_size} must be >= 8m = {8 * self.m}")
        if not 0 < self.prune_threshold < self.tau:
            raise ParameterError("prune_threshold must lie in (0, tau)")

    @classmethod
    def for_quantizer(cls, qcfg: QuantizerConfig, **kwargs) -> "BlassoConfig":
        """Default regularization tau = eps_V / 2."""
        kwargs.setdefault("tau", qcfg.eps_v / 2)
        return cls(m=qcfg.m, **kwargs)


@dataclass(frozen=True)
class BlassoResult:
    measure: AtomicMeasure
    objective: float
    iterations: int
    converged: bool
    refined: bool


def soft_threshold(x: np.ndarray, thresh: float) -> np.ndarray:
    """Complex soft-thresholding: shrink the modulus by ``thresh``, keep the phase."""
    mag = np.abs(x)
    scale = np.maximum(1.0 - thresh / np.maximum(mag, 1e-300), 0.0)
    return x * scale


def blasso_objective(measure: AtomicMeasure, yv, tau: float) -> float:
    """tau ||nu||_TV + 1/2 ||yv - F_m nu||^2."""
    yv = np.asarray(yv, dtype=complex)
    res = yv - vandermonde(measure.locations, yv.size) @ measure.amplitudes
    return tau * measure.total_variation() + 0.5 * float(np.vdot(res, res).real)


def _grid_lasso(Phi: np.ndarray, yv: np.ndarray, cfg: BlassoConfig):
    L = np.linalg.norm(Phi, 2) ** 2
    step = 1.0 / L
    G = Phi.shape[1]
    PhiH = np.ascontiguousarray(Phi.conj().T)

    def objective(x, px):
        r = px - yv
        return cfg.tau * float(np.sum(np.abs(x))) + 0.5 * float(np.vdot(r, r).real)

    # px, pz, pc track Phi @ x, Phi @ z, Phi @ cand so each step costs two matvecs
    x = np.zeros(G, dtype=complex)
    px = np.zeros_like(yv)
    f = objective(x, px)
    z, pz = x.copy(), px.copy()
    t = 1.0
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        grad = PhiH @ (pz - yv)
        cand = soft_threshold(z - step * grad, cfg.tau * step)
        pc = Phi @ cand
        f_cand = objective(cand, pc)
        t_next = (1 + math.sqrt(1 + 4 * t * t)) / 2
        if f_cand <= f:
            x_next, px_next, f_next = cand, pc, f_cand
        else:
            x_next, px_next, f_next = x, px, f
        a, b = t / t_next, (t - 1) / t_next
        z = x_next + a * (cand - x_next) + b * (x_next - x)
        pz = px_next + a * (pc - px_next) + b * (px_next - px)
        if cfg.debug:
            assert f_next <= f * (1 + 1e-14) + 1e-300, "objective increased"
        decrease = f - f_next
        moved = float(np.max(np.abs(x_next - x))) if f_next < f else 0.0
        x, px, f, t = x_next, px_next, f_next, t_next
        if f == 0.0:
            converged = True
            break
        if f_cand > f:
            # momentum overshoot, restart from the monotone iterate
            z, pz, t = x.copy(), px.copy(), 1.0
        elif decrease <= cfg.tol * f and moved <= math.sqrt(cfg.tol) * (
            float(np.max(np.abs(x))) + 1e-300
        ):
            converged = True
            break
    return x, f, it, converged


def _clusters(idx: np.ndarray, G: int, gap: int = 2) -> list[list[int]]:
    """Group sorted grid indices into runs whose steps are at most ``gap``, cyclically."""
    if idx.size == 0:
        return []
    runs = [[int(idx[0])]]
    for j in idx[1:]:
        if j - runs[-1][-1] <= gap:
            runs[-1].append(int(j))
        else:
            runs.append([int(j)])
    if len(runs) > 1 and runs[0][0] + G - runs[-1][-1] <= gap:
        runs[0] = runs.pop() + runs[0]
    return runs


def _residual(yv, t, a):
    return yv - vandermonde(t, yv.size) @ a


def _ls(yv, t):
    return np.linalg.lstsq(vandermonde(t, yv.size), yv, rcond=None)[0]


def _refine(yv: np.ndarray, t0: np.ndarray, cfg: BlassoConfig) -> tuple[np.ndarray, np.ndarray]:
    """Golden-section on each location over +-1/G, least-squares amplitudes."""
    t = t0.copy()
    half = 1.0 / cfg.grid_size

    def misfit(t_trial):
        a = _ls(yv, t_trial)
        r = _residual(yv, t_trial, a)
        return float(np.vdot(r, r).real)

    for _ in range(cfg.refine_passes):
        for j in range(t.size):
            lo, hi = t[j] - half, t[j] + half
            trial = t.copy()

            def g(s):
                trial[j] = s
                return misfit(trial)

            c, d = hi - _GOLDEN * (hi - lo), lo + _GOLDEN * (hi - lo)
            gc, gd = g(c), g(d)
            for _ in range(40):
                if gc < gd:
                    hi, d, gd = d, c, gc
                    c = hi - _GOLDEN * (hi - lo)
                    gc = g(c)
                else:
                    lo, c, gc = c, d, gd
                    d = lo + _GOLDEN * (hi - lo)
                    gd = g(d)
            best = c if gc < gd else d
            trial[j] = t[j]
            if g(best) < misfit(t):
                t[j] = best
    t = np.mod(t, 1.0)
    return t, _ls(yv, t)


def blasso_grid_solve(yv, cfg: BlassoConfig) -> BlassoResult:
    """Run the grid solver and return the measure with diagnostics."""
    yv = np.asarray(yv, dtype=complex)
    if yv.shape != (cfg.m,):
        raise ParameterError(f"expected {cfg.m} samples, got shape {yv.shape}")
    G = cfg.grid_size
    grid = np.arange(G) / G
    Phi = vandermonde(grid, cfg.m)
    x, f, iters, converged = _grid_lasso(Phi, yv, cfg)
    if not converged:
        log.warning("BLASSO stopped after %d iterations without converging", iters)
    # neighbouring grid columns are nearly collinear, so one atom may be spread
    # over several grid points; prune whole clusters by their total mass
    gap = max(2, int(G * CLUSTER_WIDTH / cfg.m))
    runs = [
        run for run in _clusters(np.flatnonzero(x), G, gap)
        if np.sum(np.abs(x[run])) >= cfg.prune_threshold
    ]
    keep = np.sort(np.concatenate(runs)) if runs else np.zeros(0, dtype=int)
    grid_measure = AtomicMeasure(grid[keep], x[keep])
    if not cfg.refine or keep.size == 0:
        return BlassoResult(grid_measure, blasso_objective(grid_measure, yv, cfg.tau), iters, converged, False)

    starts = []
    for run in runs:
        w = np.abs(x[run])
        # circular weighted mean, runs may straddle 0
        ang = np.angle(np.sum(w * np.exp(2j * np.pi * grid[run])))
        starts.append(np.mod(ang / (2 * np.pi), 1.0))
    starts = np.array(starts)
    t_ref, a_ref = _refine(yv, starts, cfg)
    base_res = _residual(yv, grid_measure.locations, grid_measure.amplitudes)
    ref_res = _residual(yv, t_ref, a_ref)
    refined = AtomicMeasure(t_ref, a_ref) if np.unique(t_ref).size == t_ref.size else None
    zero_obj = 0.5 * float(np.vdot(yv, yv).real)
    if (
        refined is not None
        and np.linalg.norm(ref_res) <= np.linalg.norm(base_res)
        and blasso_objective(refined, yv, cfg.tau) <= zero_obj
    ):
        return BlassoResult(refined, blasso_objective(refined, yv, cfg.tau), iters, converged, True)
    log.info("refinement rejected, keeping grid solution")
    return BlassoResult(grid_measure, blasso_objective(grid_measure, yv, cfg.tau), iters, converged, False)


def blasso_grid(yv, cfg: BlassoConfig) -> AtomicMeasure:
    return blasso_grid_solve(yv, cfg).measure


def tvmin_decode_quantized(
    stream: QuantizedStream, qcfg: QuantizerConfig, cfg: BlassoConfig | None = None
) -> AtomicMeasure:
    """Condense, solve BLASSO on the m condensed samples, then undo the weighting."""
    if cfg is None:
        cfg = BlassoConfig.for_quantizer(qcfg)
    nu = blasso_grid(condense(stream.q, qcfg), cfg)
    return reweight_decode(nu, qcfg)
