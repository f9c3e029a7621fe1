import math

import numpy as np

from kronmac.deteq import SystemConfig

GOLDEN = (math.sqrt(5) - 1) / 2
MP_SHANNON = 2 * math.log((1 + math.sqrt(5)) / 2) - (math.sqrt(5) - 1) ** 2 / 4


def mp_config(N=4, sigma2=1.0):
    return SystemConfig(N=N, n=(N,), R=[np.eye(N)], T=[np.eye(N)], sigma2=sigma2)


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2


def random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    g = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return g @ g.conj().T


def random_correlation(rng, n, rank=None):
    """Random PSD matrix with unit diagonal (so trace n)."""
    a = random_psd(rng, n, n + 2 if rank is None else rank)
    d = 1 / np.sqrt(a.diagonal().real)
    return d[:, None] * a * d[None, :]


def random_config(rng, K_max=3, N_max=32, n_max=None, sigma2=None, invertible=True):
    K = int(rng.integers(1, K_max + 1))
    N = int(rng.integers(2, N_max + 1))
    n_max = N_max if n_max is None else n_max
    n = [int(rng.integers(1, n_max + 1)) for _ in range(K)]
    R = [random_correlation(rng, N) for _ in range(K)]
    T = [random_correlation(rng, nk, None if invertible else max(1, nk - 1)) for nk in n]
    if sigma2 is None:
        sigma2 = float(10 ** rng.uniform(-1, 1))
    budgets = [float(rng.uniform(0.5, 2.0)) for _ in range(K)]
    return SystemConfig(N=N, n=n, R=R, T=T, sigma2=sigma2, budgets=budgets)


def random_precoders(rng, cfg):
    from kronmac.precoding import PrecoderSet

    P = []
    for nk, b in zip(cfg.n, cfg.budgets):
        p = random_psd(rng, nk)
        P.append(p * b * nk / np.trace(p).real)
    return PrecoderSet(P, cfg.budgets)
