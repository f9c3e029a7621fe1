"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 numerical non-convergence.
"""

import argparse
import csv
import logging
import math
import sys

import numpy as np

from . import __version__, selftest
from .deteq import (rate_region_constraints, shannon_de, shannon_integral_check,
                    solve_fixed_point)
from .errors import ConvergenceError, EigenConvergenceError
from .experiment import ConfigError, build_system, load_config, run_experiment
from .montecarlo import ergodic_estimate
from .precoding import PrecoderSet, iterative_waterfill

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGENCE = 0, 2, 3


def _system(args):
    exp = load_config(args.config)
    if args.N is not None and args.N < 1:
        raise ConfigError("invalid config values", ['N'])
    return exp, build_system(exp, args.N)


def _precoders(cfg, exp, kind):
    if kind == 'optimal':
        res = iterative_waterfill(cfg, eta=exp.tolerances['eta'])
        if not res.converged:
            raise ConvergenceError("iterative water-filling did not converge",
                                   res.kkt_residual, res.outer_iterations)
        return res.precoders
    return PrecoderSet.uniform(cfg)


def cmd_run(args):
    exp = load_config(args.config)
    out = run_experiment(exp, args.output)
    print(f"wrote {out}")


def cmd_fixed_point(args):
    exp, cfg = _system(args)
    z = complex(-cfg.sigma2 if args.z is None else args.z, args.z_imag)
    sol = solve_fixed_point(cfg, z, tol=exp.tolerances['epsilon_fp'])
    for k in range(cfg.K):
        print(f"user {k + 1}: e = {_num(sol.e[k])}  delta = {_num(sol.delta[k])}")
    print(f"iterations = {sol.iterations}  residual = {sol.residual:.3e}")


def _num(v):
    if np.iscomplexobj(v) and v.imag != 0:
        return f"{v.real:.10f}{v.imag:+.10f}j"
    return f"{float(np.real(v)):.10f}"


def cmd_shannon(args):
    exp, cfg = _system(args)
    x = cfg.sigma2 if args.x is None else args.x
    P = _precoders(cfg, exp, args.precoding)
    val = shannon_de(cfg, x, precoders=P)
    integral = shannon_integral_check(cfg, x, args.W, precoders=P)
    print(f"x = {x:.6g}")
    print(f"closed form = {val.value:.10f} nats ({val.value / math.log(2):.10f} bits)")
    print(f"integral    = {integral:.10f} nats")
    print(f"gap         = {abs(val.value - integral):.3e}")


def cmd_waterfill(args):
    exp, cfg = _system(args)
    res = iterative_waterfill(cfg, eta=exp.tolerances['eta'])
    for k, p, mu in zip(res.users, res.powers, res.mu):
        print(f"user {k + 1}: mu = {mu:.10f}  powers = "
              + ' '.join(f"{v:.6f}" for v in p))
    print(f"objective = {res.objective:.10f} nats")
    print(f"kkt residual = {res.kkt_residual:.3e}  outer iterations = "
          f"{res.outer_iterations}  converged = {res.converged}")
    if not res.converged:
        return EXIT_NONCONVERGENCE


def cmd_rate_region(args):
    exp, cfg = _system(args)
    P = _precoders(cfg, exp, args.precoding)
    out = open(args.output, 'w', newline='') if args.output else sys.stdout
    try:
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(['schema_version', 'subset', 'units', 'bound'])
        for subset, value in rate_region_constraints(cfg, P).items():
            label = '+'.join(str(k + 1) for k in subset)
            writer.writerow([1, label, 'bits', repr(value / math.log(2))])
    finally:
        if out is not sys.stdout:
            out.close()


def cmd_montecarlo(args):
    exp, cfg = _system(args)
    trials = args.trials if args.trials is not None else (exp.trials or 1000)
    seed = args.seed if args.seed is not None else exp.seed
    P = _precoders(cfg, exp, args.precoding)
    rep = ergodic_estimate(cfg, P, trials=trials, seed=seed)
    print(f"trials = {rep.trials}  seed = {rep.seed}")
    print(f"mean = {rep.mean:.10f} nats  std_error = {rep.std_error:.3e}")
    print(f"det_equiv = {rep.det_equiv:.10f} nats  rel_gap = {rep.rel_gap:.3e}")


def cmd_selftest(args):
    return 1 if selftest.run() else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog='kronmac',
        description='Deterministic equivalents and precoding for Kronecker MIMO-MAC channels.')
    parser.add_argument('--version', action='version', version=__version__)
    parser.add_argument('-v', '--verbose', action='store_true')
    sub = parser.add_subparsers(dest='command', required=True)

    def with_config(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument('config', help='JSON experiment config')
        p.set_defaults(func=func)
        return p

    p = with_config('run', cmd_run, 'run the configured sweep, write CSV + JSON sidecar')
    p.add_argument('-o', '--output', help='override output_path')

    for name, func, help in [
            ('fixed-point', cmd_fixed_point, 'solve the fixed-point equations at z'),
            ('shannon', cmd_shannon, 'Shannon transform equivalent and its integral check'),
            ('waterfill', cmd_waterfill, 'sum-rate optimal precoders'),
            ('rate-region', cmd_rate_region, 'all subset sum-rate bounds as CSV'),
            ('montecarlo', cmd_montecarlo, 'Monte Carlo estimate vs deterministic equivalent')]:
        p = with_config(name, func, help)
        p.add_argument('--N', type=int, help='antenna count (default: first N in config)')
        if name == 'fixed-point':
            p.add_argument('--z', type=float, help='real part of z (default -sigma2)')
            p.add_argument('--z-imag', type=float, default=0.0)
        if name == 'shannon':
            p.add_argument('--x', type=float, help='noise power (default sigma2)')
            p.add_argument('--W', type=float, default=1e6, help='integral truncation point')
        if name in ('shannon', 'rate-region', 'montecarlo'):
            p.add_argument('--precoding', choices=['uniform', 'optimal'], default='uniform')
        if name == 'rate-region':
            p.add_argument('-o', '--output', help='CSV file (default stdout)')
        if name == 'montecarlo':
            p.add_argument('--trials', type=int)
            p.add_argument('--seed', type=int)

    p = sub.add_parser('selftest', help='closed-form and oracle checks')
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        return args.func(args) or EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, EigenConvergenceError) as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == '__main__':
    sys.exit(main())
