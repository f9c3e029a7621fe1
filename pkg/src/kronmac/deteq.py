"""Deterministic equivalents for sums of Kronecker-correlated Gram matrices.

For ``B = sum_k R_k^{1/2} X_k T_k X_k^H R_k^{1/2} (+ S)`` with ``X_k`` having
i.i.d. entries of variance ``1/n_k``, the Stieltjes transform
``(1/N) tr (B - zI)^{-1}`` is approximated by

    m(z) = (1/N) tr (S + sum_k g_k R_k - zI)^{-1}
    g_k  = (1/n_k) tr T_k (I + c_k e_k T_k)^{-1},   c_k = N / n_k

where the ``e_k`` solve ``e_k = (1/N) tr R_k (S + sum_j g_j R_j - zI)^{-1}``.
At ``z = -x`` the companion quantities are ``delta_k = g_k / x``.

Precoders enter by replacing ``T_k`` with ``T_k^{1/2} P_k T_k^{1/2}``. Only
the spectrum of that matrix matters, so it is diagonalized once per call
and the fixed point iterates on eigenvalues.
"""

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import ConvergenceError, QuadratureError
from .linalg import clamp_psd, hermitian, hermitian_sqrt, log_det_hpd

__all__ = ['SystemConfig', 'FixedPointSolution', 'ShannonValue',
           'solve_fixed_point', 'stieltjes_de', 'shannon_de',
           'shannon_integral_check', 'rate_region_constraints',
           'transmit_spectrum', 'EPS_FP', 'MAX_ITER']

EPS_FP = 1e-10
MAX_ITER = 10_000


@dataclass
class SystemConfig:
    """Dimensions, correlation matrices, noise power and power budgets.

    ``R`` holds K receive correlations (N x N), ``T`` holds K transmit
    correlations (n_k x n_k). `budgets` defaults to unit power per user.
    """
    N: int
    n: Sequence[int]
    R: Sequence[np.ndarray]
    T: Sequence[np.ndarray]
    sigma2: float = 1.0
    budgets: Optional[Sequence[float]] = None
    S: Optional[np.ndarray] = None

    def __post_init__(self):
        self.n = tuple(int(v) for v in self.n)
        K = len(self.n)
        if K < 1 or self.N < 1 or min(self.n) < 1:
            raise ValueError("need K >= 1 users and positive dimensions")
        if len(self.R) != K or len(self.T) != K:
            raise ValueError("R and T must hold one matrix per user")
        self.R = [hermitian(np.asarray(r)) for r in self.R]
        self.T = [hermitian(np.asarray(t)) for t in self.T]
        for k in range(K):
            if self.R[k].shape != (self.N, self.N):
                raise ValueError(f"R[{k}] must be {self.N}x{self.N}")
            if self.T[k].shape != (self.n[k], self.n[k]):
                raise ValueError(f"T[{k}] must be {self.n[k]}x{self.n[k]}")
        if self.budgets is None:
            self.budgets = (1.0,) * K
        self.budgets = tuple(float(p) for p in self.budgets)
        if len(self.budgets) != K or min(self.budgets) <= 0:
            raise ValueError("need one positive power budget per user")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if self.S is not None:
            self.S = hermitian(np.asarray(self.S))
            clamp_psd(np.linalg.eigvalsh(self.S))

    @property
    def K(self):
        return len(self.n)

    @property
    def c(self):
        return tuple(self.N / nk for nk in self.n)

    def users(self, subset=None):
        if subset is None:
            return tuple(range(self.K))
        subset = tuple(sorted(set(int(k) for k in subset)))
        if not subset or subset[0] < 0 or subset[-1] >= self.K:
            raise ValueError(f"invalid user subset {subset}")
        return subset


@dataclass
class FixedPointSolution:
    z: complex
    e: np.ndarray
    delta: np.ndarray
    iterations: int
    residual: float
    users: tuple = ()
    g: np.ndarray = field(default=None, repr=False)


@dataclass
class ShannonValue:
    """Per-receive-antenna mutual information approximation, in nats."""
    x: float
    value: float
    logdet_T_sum: float
    logdet_R: float
    coupling: float
    solution: FixedPointSolution = field(repr=False, default=None)


def _precoder_list(precoders):
    if precoders is None:
        return None
    return list(getattr(precoders, 'P', precoders))


def transmit_spectrum(T, P=None):
    """Eigenvalues of ``T`` or of ``T^{1/2} P T^{1/2}``, clamped at zero."""
    if P is None:
        return clamp_psd(np.linalg.eigvalsh(hermitian(T)))
    root = hermitian_sqrt(T)
    eff = hermitian(root @ hermitian(P) @ root)
    return clamp_psd(np.linalg.eigvalsh(eff))


def _spectra(cfg, users, precoders):
    P = _precoder_list(precoders)
    if P is not None and len(P) != cfg.K:
        raise ValueError("precoder set must hold one matrix per user")
    return [transmit_spectrum(cfg.T[k], None if P is None else P[k]) for k in users]


def _g(spectra, n, c, e):
    return np.array([np.sum(t / (1.0 + ck * ek * t)) / nk
                     for t, nk, ck, ek in zip(spectra, n, c, e)])


def _resolvent(base, Rs, g, z):
    m = base + np.tensordot(g, Rs, axes=1) - z * np.eye(base.shape[0])
    return np.linalg.inv(m)


def _iterate(base, Rs, spectra, n, c, z, tol, max_iter, e0):
    N = base.shape[0]
    real = np.imag(z) == 0
    z = z.real if real else z
    e = np.array(e0, dtype=float if real else complex)
    residual = math.inf
    for it in range(1, max_iter + 1):
        g = _g(spectra, n, c, e)
        inv = _resolvent(base, Rs, g, z)
        e_new = np.einsum('kij,ji->k', Rs, inv) / N
        if real:
            e_new = e_new.real
        residual = float(np.max(np.abs(e_new - e)))
        e = e_new
        if residual <= tol:
            return e, _g(spectra, n, c, e), it, residual
    raise ConvergenceError("fixed-point iteration did not converge",
                           residual, max_iter, iterate=e)


def _solve(cfg, z, users, spectra, tol, max_iter, e0):
    z = complex(z)
    if z.imag == 0 and z.real >= 0:
        raise ValueError("z must lie off the nonnegative real axis")
    Rs = np.stack([cfg.R[k] for k in users])
    n = [cfg.n[k] for k in users]
    c = [cfg.c[k] for k in users]
    base = np.zeros((cfg.N, cfg.N), complex) if cfg.S is None else cfg.S
    if e0 is None:
        e0 = np.full(len(users), -1.0 / z)
    e0 = np.asarray(e0, dtype=complex)
    if z.imag == 0:
        e0 = e0.real
    e, g, it, res = _iterate(base, Rs, spectra, n, c, z, tol, max_iter, e0)
    delta = g / (-z.real if z.imag == 0 else -z)
    return FixedPointSolution(z=z, e=e, delta=delta, iterations=it,
                              residual=res, users=users, g=g)


def solve_fixed_point(cfg, z, precoders=None, users=None, tol=EPS_FP,
                      max_iter=MAX_ITER, e0=None):
    """Solve the coupled equations for ``e_k(z)`` by Picard iteration.

    Starts from ``e_k = -1/z`` unless `e0` is given and stops once
    ``max_k |e_k^{n} - e_k^{n-1}| <= tol``.

    Parameters
    ----------
    cfg : SystemConfig
    z : complex
        Evaluation point off the nonnegative real axis. For real negative
        `z` all arithmetic on ``e`` is real.
    precoders : PrecoderSet or sequence of matrices, optional
        Per-user transmit covariances; ``T_k`` is then replaced by
        ``T_k^{1/2} P_k T_k^{1/2}``.
    users : iterable of int, optional
        Zero-based user indices to include; defaults to all users.

    Raises
    ------
    ConvergenceError
        If `max_iter` iterations do not reach `tol`.
    """
    users = cfg.users(users)
    return _solve(cfg, z, users, _spectra(cfg, users, precoders), tol, max_iter, e0)


def stieltjes_de(cfg, z, sol=None, precoders=None, users=None):
    """Deterministic equivalent of ``(1/N) tr (B - zI)^{-1}``."""
    if sol is None:
        sol = solve_fixed_point(cfg, z, precoders=precoders, users=users)
    base = np.zeros((cfg.N, cfg.N), complex) if cfg.S is None else cfg.S
    Rs = np.stack([cfg.R[k] for k in sol.users])
    inv = _resolvent(base, Rs, sol.g, complex(z))
    m = np.trace(inv) / cfg.N
    return m.real if complex(z).imag == 0 else complex(m)


def _shannon_terms(cfg, x, sol, spectra):
    users = sol.users
    N = cfg.N
    logdet_t = sum(np.sum(np.log1p(cfg.c[k] * ek * t))
                   for k, ek, t in zip(users, sol.e, spectra)) / N
    mat = np.eye(N) + np.tensordot(sol.delta, np.stack([cfg.R[k] for k in users]), axes=1)
    logdet_r = log_det_hpd(hermitian(mat)) / N
    coupling = x * float(np.dot(sol.delta, sol.e))
    return float(logdet_t), float(logdet_r), coupling


def shannon_de(cfg, x=None, precoders=None, users=None, tol=EPS_FP, e0=None):
    """Deterministic equivalent of ``(1/N) log det(I + B/x)`` in nats.

    `x` defaults to ``cfg.sigma2``. With `precoders`, this is the
    approximation of the ergodic mutual information of the users in
    `users` under Gaussian inputs with those covariances.
    """
    if cfg.S is not None:
        raise ValueError("the Shannon transform equivalent requires S = 0")
    x = cfg.sigma2 if x is None else float(x)
    if not x > 0:
        raise ValueError("x must be positive")
    users = cfg.users(users)
    spectra = _spectra(cfg, users, precoders)
    sol = _solve(cfg, -x, users, spectra, tol, MAX_ITER, e0)
    lt, lr, cp = _shannon_terms(cfg, x, sol, spectra)
    return ShannonValue(x=x, value=lt + lr - cp, logdet_T_sum=lt,
                        logdet_R=lr, coupling=cp, solution=sol)


def shannon_integral_check(cfg, x=None, W=1e6, precoders=None, users=None,
                           epsabs=1e-9):
    """Shannon transform equivalent recomputed as an integral of ``m``.

    Integrates ``1/w - m(-w)`` over ``[x, W]`` (in ``log w``, by adaptive
    quadrature) and adds a tail ``C/W`` where ``1/w - m(-w) ~ C/w**2``; C is
    extrapolated from its values at ``W/2`` and ``W``.
    """
    if cfg.S is not None:
        raise ValueError("the Shannon transform equivalent requires S = 0")
    x = cfg.sigma2 if x is None else float(x)
    if not 0 < x <= W:
        raise ValueError("need 0 < x <= W")
    if x == W:
        return 0.0
    users = cfg.users(users)
    spectra = _spectra(cfg, users, precoders)
    Rs = np.stack([cfg.R[k] for k in users])
    N = cfg.N

    def gap(w):
        # 1/w - m(-w) = (1/(N w)) tr M^{-1} G, with M = G + wI: no cancellation
        sol = _solve(cfg, -w, users, spectra, 1e-13 * min(1.0, 1.0 / w), MAX_ITER, None)
        G = np.tensordot(sol.g, Rs, axes=1)
        inv = _resolvent(np.zeros((N, N)), Rs, sol.g, -w)
        return float(np.einsum('ij,ji->', inv, G).real) / (N * w)

    value, abserr, info = quad(lambda u: math.exp(u) * gap(math.exp(u)),
                               math.log(x), math.log(W), epsabs=epsabs,
                               epsrel=0.0, limit=200, full_output=1)[:3]
    if abserr > max(epsabs, 1e-6):
        raise QuadratureError("Shannon integral did not converge", value, abserr)
    c_hi = W ** 2 * gap(W)
    c_lo = (W / 2) ** 2 * gap(W / 2)
    return value + (2 * c_hi - c_lo) / W


def rate_region_constraints(cfg, precoders=None, users=None):
    """Sum-rate bounds for every nonempty subset of `users`.

    Returns a dict mapping sorted tuples of zero-based user indices to the
    deterministic equivalent of the subset's ergodic sum rate (nats per
    receive antenna) at noise power ``cfg.sigma2``.
    """
    users = cfg.users(users)
    if len(users) > 16:
        raise ValueError("at most 16 users are supported")
    out = {}
    for size in range(1, len(users) + 1):
        for subset in combinations(users, size):
            out[subset] = shannon_de(cfg, precoders=precoders, users=subset).value
    return out
