"""Closed-form and oracle checks run by ``kronmac selftest``."""

import math

import numpy as np

from .deteq import (SystemConfig, shannon_de, shannon_integral_check,
                    solve_fixed_point, stieltjes_de)
from .precoding import iterative_waterfill, waterfill_step

GOLDEN = (math.sqrt(5) - 1) / 2
MP_SHANNON = 2 * math.log((1 + math.sqrt(5)) / 2) - (math.sqrt(5) - 1) ** 2 / 4


def _mp(N=4):
    return SystemConfig(N=N, n=(N,), R=[np.eye(N)], T=[np.eye(N)])


def check_mp_fixed_point():
    e = solve_fixed_point(_mp(), -1.0).e[0]
    return abs(e - GOLDEN) <= 1e-8, f"e = {e:.12f}"


def check_mp_stieltjes():
    m = stieltjes_de(_mp(), -1.0)
    return abs(m - GOLDEN) <= 1e-8, f"m = {m:.12f}"


def check_mp_shannon():
    v = shannon_de(_mp(), 1.0).value
    return abs(v - MP_SHANNON) <= 1e-8, f"V = {v:.12f}"


def check_integral_identity():
    cfg = _mp()
    gap = abs(shannon_de(cfg, 1.0).value - shannon_integral_check(cfg, 1.0))
    return gap <= 1e-4, f"gap = {gap:.2e}"


def check_waterfill_step():
    p, mu = waterfill_step([2.0, 1.0], 1.0, 1.0, 1.0)
    ok = abs(mu - 1.75) <= 1e-12 and np.allclose(p, [1.25, 0.75], atol=1e-12)
    return ok, f"mu = {mu}, p = {p}"


def check_waterfill_grid():
    # brute force over diagonal powers of one user with a 2-mode channel
    T = np.diag([1.6, 0.4])
    cfg = SystemConfig(N=2, n=(2,), R=[np.eye(2)], T=[T], sigma2=0.5)
    res = iterative_waterfill(cfg)
    best = -np.inf
    for i in range(101):
        p1 = 2.0 * i / 100
        P = [np.diag([p1, 2.0 - p1])]
        best = max(best, shannon_de(cfg, precoders=P).value)
    ok = res.converged and best <= res.objective + 1e-9
    return ok, f"waterfill {res.objective:.8f}, grid {best:.8f}"


CHECKS = [
    ('MP fixed point e(-1)', check_mp_fixed_point),
    ('MP Stieltjes m(-1)', check_mp_stieltjes),
    ('MP Shannon V(1)', check_mp_shannon),
    ('Shannon integral identity', check_integral_identity),
    ('two-mode water level', check_waterfill_step),
    ('water-filling vs grid search', check_waterfill_grid),
]


def run(stream=None):
    """Run every check, print one line each, return the number of failures."""
    failures = 0
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}", file=stream)
    return failures
