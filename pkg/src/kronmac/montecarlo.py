"""Monte Carlo oracle for the deterministic equivalents.

Every channel draw is keyed by ``(seed, trial, user)``, so a trial can be
regenerated on its own and results do not depend on evaluation order or
batching.
"""

from dataclasses import dataclass
from typing import List

import numpy as np

from .deteq import shannon_de
from .linalg import hermitian_sqrt, log_det_hpd, sample_complex_gaussian

__all__ = ['ChannelRealization', 'MonteCarloReport', 'channel_factors',
           'sample_channel', 'empirical_mutual_info', 'mutual_info_samples',
           'ergodic_estimate', 'empirical_stieltjes']

DEFAULT_TRIALS = 10_000
BATCH = 256


@dataclass
class ChannelRealization:
    H: List[np.ndarray]
    trial_index: int
    seed: int


@dataclass
class MonteCarloReport:
    trials: int
    seed: int
    mean: float
    std_error: float
    det_equiv: float
    rel_gap: float

    @property
    def z_score(self):
        return abs(self.mean - self.det_equiv) / self.std_error if self.std_error else np.inf


def channel_factors(cfg):
    """Hermitian square roots ``(R_k^{1/2}, T_k^{1/2})`` for every user."""
    return [(hermitian_sqrt(r), hermitian_sqrt(t)) for r, t in zip(cfg.R, cfg.T)]


def _core(cfg, k, trial, seed):
    return sample_complex_gaussian(cfg.N, cfg.n[k], 1.0 / cfg.n[k], seed, (trial, k))


def sample_channel(cfg, trial, seed, factors=None):
    """Draw ``H_k = R_k^{1/2} X_k T_k^{1/2}`` for every user."""
    factors = channel_factors(cfg) if factors is None else factors
    H = [rh @ _core(cfg, k, trial, seed) @ th for k, (rh, th) in enumerate(factors)]
    return ChannelRealization(H, trial, seed)


def _gram(H, P, users):
    """Sum of ``H_k P_k H_k^H``; H_k may carry leading batch axes."""
    total = 0
    for k in users:
        Hk = H[k]
        HP = Hk if P is None else Hk @ P[k]
        total = total + HP @ np.swapaxes(Hk.conj(), -1, -2)
    return total


def empirical_mutual_info(real, precoders=None, sigma2=1.0, users=None):
    """``(1/N) log det(I + (1/sigma2) sum_k H_k P_k H_k^H)`` in nats."""
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    users = range(len(real.H)) if users is None else users
    P = None if precoders is None else list(getattr(precoders, 'P', precoders))
    N = real.H[0].shape[0]
    gram = _gram(real.H, P, users)
    return float(log_det_hpd(np.eye(N) + gram / sigma2)) / N


def _batched_channels(cfg, trials, seed, factors, start):
    stop = min(start + BATCH, trials)
    H = []
    for k, (rh, th) in enumerate(factors):
        X = np.stack([_core(cfg, k, t, seed) for t in range(start, stop)])
        H.append(rh @ X @ th)
    return H


def mutual_info_samples(cfg, precoders=None, users=None, trials=DEFAULT_TRIALS,
                        seed=0, sigma2=None):
    """Per-trial mutual information for trials ``0 .. trials-1``."""
    users = cfg.users(users)
    sigma2 = cfg.sigma2 if sigma2 is None else sigma2
    P = None if precoders is None else list(getattr(precoders, 'P', precoders))
    factors = channel_factors(cfg)
    eye = np.eye(cfg.N)
    out = np.empty(trials)
    for start in range(0, trials, BATCH):
        H = _batched_channels(cfg, trials, seed, factors, start)
        gram = _gram(H, P, users)
        out[start:start + gram.shape[0]] = log_det_hpd(eye + gram / sigma2) / cfg.N
    return out


def ergodic_estimate(cfg, precoders=None, users=None, trials=DEFAULT_TRIALS, seed=0):
    """Sample mean of the mutual information against its deterministic equivalent.

    Without `precoders` the users transmit with identity covariance. The
    reported ``det_equiv`` uses the same precoders, users and noise power.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials")
    samples = mutual_info_samples(cfg, precoders, users, trials, seed)
    # np.sum reduces pairwise
    mean = float(np.sum(samples) / trials)
    se = float(np.std(samples, ddof=1) / np.sqrt(trials))
    de = shannon_de(cfg, precoders=precoders, users=users).value
    return MonteCarloReport(trials=trials, seed=seed, mean=mean, std_error=se,
                            det_equiv=de, rel_gap=abs(mean - de) / max(de, 1e-300))


def empirical_stieltjes(cfg, trials, z, seed=0, per_trial=False):
    """Average of ``(1/N) tr (B - zI)^{-1}`` with ``B = sum_k H_k H_k^H``.

    The resolvent trace is taken from the eigenvalues of each ``B``. With
    ``per_trial=True`` the individual per-trial values are returned instead.
    """
    z = complex(z)
    if z.imag == 0 and z.real >= 0:
        raise ValueError("z must lie off the nonnegative real axis")
    factors = channel_factors(cfg)
    users = cfg.users()
    values = np.empty(trials, dtype=complex)
    for start in range(0, trials, BATCH):
        H = _batched_channels(cfg, trials, seed, factors, start)
        lam = np.linalg.eigvalsh(_gram(H, None, users))
        values[start:start + lam.shape[0]] = np.mean(1.0 / (lam - z), axis=-1)
    if per_trial:
        return values
    mean = np.sum(values) / trials
    return mean.real if z.imag == 0 else complex(mean)
