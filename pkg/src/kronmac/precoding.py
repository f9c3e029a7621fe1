"""Sum-rate maximizing precoders for the deterministic-equivalent MAC rate.

The optimal covariance of user k shares the eigenvectors of ``T_k`` and its
eigenvalues are water-filled against floors ``1 / (c_k e_k t_ki)``, where
``e_k`` depends on every user's powers. :func:`iterative_waterfill`
alternates between the two until the powers stop moving.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .deteq import (MAX_ITER, SystemConfig, _shannon_terms, _solve,
                    shannon_de)
from .linalg import clamp_psd, hermitian, hermitian_eig

__all__ = ['PrecoderSet', 'WaterfillResult', 'ConcavityReport',
           'waterfill_step', 'iterative_waterfill', 'concavity_probe',
           'RANK_TOL', 'ETA']

log = logging.getLogger(__name__)

ETA = 1e-8
FP_TOL = 1e-12
MAX_OUTER = 1000
# relative to the largest eigenvalue of T_k
RANK_TOL = 1e-12
MIN_STEP = 1.0 / 64


@dataclass
class PrecoderSet:
    P: List[np.ndarray]
    budgets: Sequence[float]

    def __post_init__(self):
        self.P = [hermitian(p) for p in self.P]
        self.budgets = tuple(float(b) for b in self.budgets)
        if len(self.P) != len(self.budgets):
            raise ValueError("one budget per precoder")
        for k, p in enumerate(self.P):
            clamp_psd(np.linalg.eigvalsh(p))
            if self.power(k) > self.budgets[k] + 1e-12:
                raise ValueError(f"precoder {k} exceeds its power budget")

    def power(self, k):
        """Average per-antenna power ``(1/n_k) tr P_k``."""
        p = self.P[k]
        return float(np.trace(p).real) / p.shape[0]

    @classmethod
    def uniform(cls, cfg):
        return cls([b * np.eye(nk) for b, nk in zip(cfg.budgets, cfg.n)], cfg.budgets)

    @classmethod
    def zero(cls, cfg):
        return cls([np.zeros((nk, nk)) for nk in cfg.n], cfg.budgets)


@dataclass
class WaterfillResult:
    precoders: PrecoderSet
    users: tuple
    e_final: np.ndarray
    objective: float
    outer_iterations: int
    kkt_residual: float
    mu: np.ndarray
    powers: List[np.ndarray]
    converged: bool = True
    history: List[float] = field(default_factory=list, repr=False)


def waterfill_step(t_eigs, c, e, budget):
    """Water-fill `budget` (average per mode) over gains ``c * e * t_i``.

    Returns ``(powers, mu)`` with ``powers_i = max(mu - 1/(c e t_i), 0)``
    and ``mean(powers) == budget``. The water level is found exactly by
    walking the sorted floors, so ties get identical powers.
    """
    t = np.asarray(t_eigs, dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(t <= 0):
        raise ValueError("t_eigs must be a nonempty vector of positive values")
    if not (c > 0 and e > 0 and budget > 0):
        raise ValueError("c, e and budget must be positive")
    floors = 1.0 / (c * e * t)
    ordered = np.sort(floors)
    total = budget * t.size
    csum = np.cumsum(ordered)
    # largest active set whose level clears its own highest floor
    m = t.size
    while m > 1:
        mu = (total + csum[m - 1]) / m
        if mu > ordered[m - 1]:
            break
        m -= 1
    mu = (total + csum[m - 1]) / m
    powers = np.maximum(mu - floors, 0.0)
    return powers, mu


def _eigenmodes(T):
    w, u = hermitian_eig(T)
    w = clamp_psd(w)
    if w[0] <= 0:
        raise ValueError("transmit correlation has no positive eigenvalue")
    active = w > RANK_TOL * w[0]
    return np.where(active, w, 0.0), u, active


def _fill(modes, cfg, users, e):
    out, levels = [], []
    for (t, _, active), k, ek in zip(modes, users, e):
        p = np.zeros_like(t)
        nk = cfg.n[k]
        # inactive modes carry no power, so the active ones share the whole budget
        powers, mu = waterfill_step(t[active], cfg.c[k], ek,
                                    cfg.budgets[k] * nk / active.sum())
        p[active] = powers
        out.append(p)
        levels.append(mu)
    return out, np.array(levels)


def iterative_waterfill(cfg, users=None, eta=ETA, max_outer=MAX_OUTER, fp_tol=FP_TOL):
    """Maximize the sum-rate equivalent of `users` at noise power ``cfg.sigma2``.

    Starts from uniform powers, then repeats: solve the fixed point for the
    current powers (warm-started from the previous ``e``), water-fill every
    user against the new ``e``. Stops when no power moves by more than
    `eta`. Users outside `users` are given uniform precoders.

    Updates are applied in full until the objective drops, which signals the
    plain iteration is cycling; from then on each update moves only part of
    the way (the fraction halves at each drop, down to 1/64). Any limit of
    the damped scheme is still a fixed point of the plain one.

    If `max_outer` iterations pass without convergence, the best iterate seen
    is returned with ``converged=False`` and a warning is issued.
    """
    users = cfg.users(users)
    x = cfg.sigma2
    modes = [_eigenmodes(cfg.T[k]) for k in users]
    powers = [np.full(cfg.n[k], cfg.budgets[k]) for k in users]

    def evaluate(p, e0):
        spectra = [t * pk for (t, _, _), pk in zip(modes, p)]
        sol = _solve(cfg, -x, users, spectra, fp_tol, MAX_ITER, e0)
        lt, lr, cp = _shannon_terms(cfg, x, sol, spectra)
        return sol, lt + lr - cp

    sol, obj = evaluate(powers, None)
    history = [obj]
    best = (obj, powers, sol)
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_outer + 1):
        target, _ = _fill(modes, cfg, users, sol.e)
        # measured on the undamped update, i.e. the water-filling residual
        change = max(float(np.max(np.abs(q - p))) for p, q in zip(powers, target))
        powers = [p + step * (q - p) for p, q in zip(powers, target)]
        sol, obj = evaluate(powers, sol.e)
        if obj < history[-1] - 1e-12 and step > MIN_STEP:
            # plain updates are cycling; damping keeps the same fixed points
            step /= 2
            log.info("objective decreased at iteration %d, damping outer step to %g",
                     it, step)
        history.append(obj)
        if obj > best[0]:
            best = (obj, powers, sol)
        if change <= eta:
            converged = True
            break

    if not converged:
        warnings.warn(f"iterative water-filling did not converge in {max_outer} "
                      "iterations; returning the best iterate", RuntimeWarning)
        obj, powers, sol = best

    target, mu = _fill(modes, cfg, users, sol.e)
    kkt = max(float(np.max(np.abs(a - b))) for a, b in zip(target, powers))

    P = [b * np.eye(nk) for b, nk in zip(cfg.budgets, cfg.n)]
    for (_, u, _), k, pk in zip(modes, users, powers):
        P[k] = hermitian((u * pk) @ u.conj().T)
    return WaterfillResult(
        precoders=PrecoderSet(P, cfg.budgets), users=users, e_final=sol.e,
        objective=obj, outer_iterations=it, kkt_residual=kkt, mu=mu,
        powers=powers, converged=converged, history=history)


@dataclass
class ConcavityReport:
    lambdas: np.ndarray
    values: List[np.ndarray]
    second_differences: List[np.ndarray]

    @property
    def max_second_difference(self):
        return max(float(np.max(d)) for d in self.second_differences)

    @property
    def concave(self):
        return self.max_second_difference < 0


def concavity_probe(cfg, pairs, grid=10, users=None):
    """Check concavity of the rate equivalent along precoder segments.

    For each ``(Pa, Pb)`` evaluates ``phi(l) = V(l*Pa + (1-l)*Pb)`` on
    ``grid + 1`` equispaced points of [0, 1] and records the interior
    second differences ``phi(l-h) - 2 phi(l) + phi(l+h)``.
    """
    if grid < 2:
        raise ValueError("grid must be at least 2")
    lambdas = np.linspace(0.0, 1.0, grid + 1)
    values, diffs = [], []
    for pa, pb in pairs:
        phi = []
        for lam in lambdas:
            mix = PrecoderSet([lam * a + (1 - lam) * b for a, b in zip(pa.P, pb.P)],
                              cfg.budgets)
            phi.append(shannon_de(cfg, precoders=mix, users=users).value)
        phi = np.array(phi)
        values.append(phi)
        diffs.append(phi[:-2] - 2 * phi[1:-1] + phi[2:])
    return ConcavityReport(lambdas, values, diffs)
