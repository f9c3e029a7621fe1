"""Experiment configuration and the sweep runner behind ``kronmac run``.

A config is a JSON object; see ``docs/config.md``. Parsing fills in
defaults and produces a normalized dict whose JSON dump is canonical, so the
copy echoed into the metadata sidecar re-ingests to identical bytes.
"""

import csv
import io
import json
import math
import platform
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .correlation import (AngularSpread, Side, grid_array, jakes_correlation,
                          scenario_two_user)
from .errors import ConvergenceError
from .deteq import EPS_FP, SystemConfig, rate_region_constraints, solve_fixed_point
from .montecarlo import ergodic_estimate
from .precoding import ETA, PrecoderSet, iterative_waterfill

__all__ = ['ConfigError', 'ExperimentConfig', 'load_config', 'parse_config',
           'build_system', 'run_experiment', 'SCHEMA_VERSION']

SCHEMA_VERSION = 1
SCENARIOS = ('two_user_linear', 'two_user_cubic', 'custom')
PRECODINGS = ('uniform', 'optimal')
LN2 = math.log(2.0)


class ConfigError(ValueError):
    def __init__(self, message, keys=()):
        self.keys = tuple(keys)
        if self.keys:
            message = f"{message}: {', '.join(self.keys)}"
        super().__init__(message)


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict

    def __getattr__(self, name):
        try:
            return self.raw[name]
        except KeyError:
            raise AttributeError(name) from None

    @property
    def sigma2(self):
        return 10 ** (-self.raw['snr_db'] / 10)

    def dumps(self):
        return json.dumps(self.raw, sort_keys=True, indent=2)


def _number(value, key, bad, kind=float, positive=False, minimum=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        bad.append(key)
        return None
    if kind is int and (not float(value).is_integer()):
        bad.append(key)
        return None
    value = kind(value)
    if not math.isfinite(value) or (positive and value <= 0) or \
            (minimum is not None and value < minimum):
        bad.append(key)
        return None
    return value


def _int_list(value, key, bad):
    items = value if isinstance(value, list) else [value]
    out = [_number(v, key, bad, int, minimum=1) for v in items]
    if not items:
        bad.append(key)
    return out


def _corr_spec(spec, key, bad):
    if spec == 'identity':
        return 'identity'
    if not isinstance(spec, dict):
        bad.append(key)
        return None
    dims = spec.get('dims')
    spread = spec.get('spread')
    if not (isinstance(dims, list) and len(dims) == 3):
        bad.append(f"{key}.dims")
        dims = None
    else:
        dims = [_number(d, f"{key}.dims", bad, int, minimum=1) for d in dims]
    if not (isinstance(spread, list) and len(spread) == 2):
        bad.append(f"{key}.spread")
        spread = None
    else:
        spread = [_number(s, f"{key}.spread", bad) for s in spread]
    return {'dims': dims, 'spread': spread}


def parse_config(data):
    """Validate a config mapping and return a normalized :class:`ExperimentConfig`.

    Raises :class:`ConfigError` listing every offending key.
    """
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    bad, unknown = [], []
    known = {'scenario', 'N', 'spacing_over_lambda', 'snr_db', 'precoding',
             'trials', 'seed', 'tolerances', 'output_path', 'users', 'n'}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError("unknown config keys", unknown)

    scenario = data.get('scenario', 'two_user_linear')
    if scenario not in SCENARIOS:
        bad.append('scenario')
    N = _int_list(data.get('N', 8), 'N', bad)
    spacing = _number(data.get('spacing_over_lambda', 0.5), 'spacing_over_lambda',
                      bad, positive=True)
    snr_db = _number(data.get('snr_db', 20.0), 'snr_db', bad)
    prec = data.get('precoding', ['uniform'])
    prec = prec if isinstance(prec, list) else [prec]
    if not prec or any(p not in PRECODINGS for p in prec):
        bad.append('precoding')
    trials = _number(data.get('trials', 0), 'trials', bad, int, minimum=0)
    if trials == 1:
        bad.append('trials')
    seed = _number(data.get('seed', 0), 'seed', bad, int, minimum=0)
    tol = data.get('tolerances', {})
    if not isinstance(tol, dict) or set(tol) - {'epsilon_fp', 'eta'}:
        bad.append('tolerances')
        tol = {}
    eps = _number(tol.get('epsilon_fp', EPS_FP), 'tolerances.epsilon_fp', bad, positive=True)
    eta = _number(tol.get('eta', ETA), 'tolerances.eta', bad, positive=True)
    out_path = data.get('output_path', 'results.csv')
    if not isinstance(out_path, str) or not out_path:
        bad.append('output_path')

    users = None
    if scenario == 'custom':
        users = []
        if len(N) != 1:
            bad.append('N')
        raw_users = data.get('users')
        if not isinstance(raw_users, list) or not raw_users:
            bad.append('users')
            raw_users = []
        for i, u in enumerate(raw_users):
            if not isinstance(u, dict) or set(u) - {'n', 'T', 'R', 'budget'}:
                bad.append(f"users[{i}]")
                continue
            users.append({
                'n': _number(u.get('n'), f"users[{i}].n", bad, int, minimum=1),
                'T': _corr_spec(u.get('T', 'identity'), f"users[{i}].T", bad),
                'R': _corr_spec(u.get('R', 'identity'), f"users[{i}].R", bad),
                'budget': _number(u.get('budget', 1.0), f"users[{i}].budget", bad,
                                  positive=True),
            })
    elif 'users' in data:
        bad.append('users')
    if 'n' in data and data['n'] != data.get('N', 8):
        # the two-user scenarios put n = N antennas on every device
        bad.append('n')
    if scenario == 'two_user_cubic':
        for v in N:
            if v is not None and round(v ** (1 / 3)) ** 3 != v:
                bad.append('N')
                break

    if bad:
        raise ConfigError("invalid config values", sorted(set(bad)))
    raw = {
        'scenario': scenario, 'N': N, 'spacing_over_lambda': spacing,
        'snr_db': snr_db, 'precoding': prec, 'trials': trials, 'seed': seed,
        'tolerances': {'epsilon_fp': eps, 'eta': eta}, 'output_path': out_path,
    }
    if users is not None:
        raw['users'] = users
    return ExperimentConfig(raw)


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return parse_config(data)


def _custom_matrix(spec, dim, spacing, side, key):
    if spec == 'identity':
        return np.eye(dim)
    dims = spec['dims']
    if dims[0] * dims[1] * dims[2] != dim:
        raise ConfigError("array size does not match dimension", [key])
    array = grid_array(dims, spacing, 1.0)
    return jakes_correlation(array, AngularSpread(*spec['spread']), side).matrix


def build_system(exp, N=None):
    """SystemConfig for one cell of the sweep (`N` defaults to the first)."""
    N = exp.N[0] if N is None else N
    if exp.scenario == 'custom':
        users = exp.users
        R = [_custom_matrix(u['R'], N, exp.spacing_over_lambda, Side.RECEIVE,
                            f"users[{i}].R") for i, u in enumerate(users)]
        T = [_custom_matrix(u['T'], u['n'], exp.spacing_over_lambda, Side.TRANSMIT,
                            f"users[{i}].T") for i, u in enumerate(users)]
        return SystemConfig(N=N, n=[u['n'] for u in users], R=R, T=T,
                            sigma2=exp.sigma2, budgets=[u['budget'] for u in users])
    geometry = 'cubic' if exp.scenario == 'two_user_cubic' else 'linear'
    return scenario_two_user(N, exp.spacing_over_lambda, 1.0, geometry, exp.snr_db)


def _subset_label(subset):
    return '+'.join(str(k + 1) for k in subset)


def _fmt(v):
    return repr(float(v))


def experiment_rows(exp):
    """Yield one result dict per (N, precoding, user subset) cell.

    Rates are in bits per receive antenna. Raises ``ConvergenceError`` when
    water-filling fails to converge.
    """
    for N in exp.N:
        cfg = build_system(exp, N)
        for precoding in exp.precoding:
            if precoding == 'optimal':
                res = iterative_waterfill(cfg, eta=exp.tolerances['eta'])
                if not res.converged:
                    raise ConvergenceError("iterative water-filling did not converge",
                                           res.kkt_residual, res.outer_iterations)
                precoders, iterations = res.precoders, res.outer_iterations
            else:
                precoders = PrecoderSet.uniform(cfg)
                iterations = solve_fixed_point(
                    cfg, -cfg.sigma2, precoders,
                    tol=exp.tolerances['epsilon_fp']).iterations
            bounds = rate_region_constraints(cfg, precoders)
            for subset, value in bounds.items():
                row = {'schema_version': SCHEMA_VERSION, 'scenario': exp.scenario,
                       'N': N, 'precoding': precoding,
                       'subset': _subset_label(subset), 'units': 'bits',
                       'det_equiv': value / LN2, 'iterations': iterations}
                if exp.trials:
                    rep = ergodic_estimate(cfg, precoders, subset, exp.trials, exp.seed)
                    row.update(mc_mean=rep.mean / LN2, mc_std_error=rep.std_error / LN2,
                               rel_gap=rep.rel_gap)
                yield row


def columns(exp):
    cols = ['schema_version', 'scenario', 'N', 'precoding', 'subset', 'units', 'det_equiv']
    if exp.trials:
        cols += ['mc_mean', 'mc_std_error', 'rel_gap']
    return cols + ['iterations']


def render_csv(exp, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    cols = columns(exp)
    writer.writerow(cols)
    for row in rows:
        writer.writerow([_fmt(row[c]) if isinstance(row[c], float) else row[c]
                         for c in cols])
    return buf.getvalue()


def sidecar_path(output_path):
    return Path(output_path).with_suffix('.json')


def run_experiment(exp, output_path=None):
    """Run the sweep, write the CSV and its JSON metadata sidecar.

    Returns the CSV path. The CSV depends only on the config; timing and
    versions go to the sidecar.
    """
    start = time.perf_counter()
    out = Path(output_path or exp.output_path)
    rows = list(experiment_rows(exp))
    text = render_csv(exp, rows)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding='utf-8')
    meta = {
        'schema_version': SCHEMA_VERSION,
        'config': exp.raw,
        'rows': len(rows),
        'versions': {'kronmac': __version__, 'python': platform.python_version(),
                     'numpy': np.__version__, 'scipy': scipy.__version__},
        'wall_time_s': time.perf_counter() - start,
    }
    sidecar_path(out).write_text(json.dumps(meta, sort_keys=True, indent=2) + '\n',
                                 encoding='utf-8')
    return out
