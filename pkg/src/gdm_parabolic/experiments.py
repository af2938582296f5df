"""Convergence experiments: one solve per mesh, errors, CSV and rates."""

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .discretisations import build_cvfe, build_p1
from .exact import heat_irregular_initial, manufactured_periodic, tent_solution
from .interpolation import interpolate_space_time
from .lemmas import run_lemma_suite
from .metrics import CSV_COLUMNS, convergence_rate, evaluate_errors, space_time_distance
from .solver import TimeGrid, scheme_residual, solve

__all__ = ['ExperimentConfig', 'CaseResult', 'CASES', 'run_mesh', 'run_case',
           'write_csv', 'read_csv', 'rates_from_csv', 'run_lemmas',
           'EXIT_OK', 'EXIT_RATE', 'EXIT_SOLVER']

EXIT_OK, EXIT_RATE, EXIT_SOLVER = 0, 2, 3

CASES = {
    'irregular-initial': heat_irregular_initial,
    'irregular-rhs': tent_solution,
    'periodic': manufactured_periodic,
}

DEFAULT_WINDOWS = {
    'irregular-initial': {'E1': (0.35, 0.65), 'E2': (0.35, 0.65)},
    'irregular-rhs': {'E1': (1.7, 2.3), 'E2': (0.8, 1.2)},
    'periodic': {},
}

DISCRETISATIONS = {'cvfe': build_cvfe, 'p1': build_p1}
RESIDUAL_TOL = 1e-9


@dataclass
class ExperimentConfig:
    case: str = 'irregular-initial'
    meshes: tuple = (31, 63, 127, 255)
    time_const: float = 0.9
    T: float = 0.1
    disc: str = 'cvfe'
    windows: dict = None
    out: str = None
    seed: int = 0
    samples_per_step: int = 8
    interpolation: bool = False
    workers: int = None

    def __post_init__(self):
        self.meshes = tuple(int(m) for m in self.meshes)
        if self.windows is None:
            self.windows = dict(DEFAULT_WINDOWS.get(self.case, {}))
        self.validate()

    def validate(self):
        if self.case not in CASES:
            raise ValueError('unknown case %r (choose from %s)' % (self.case, ', '.join(CASES)))
        if self.disc not in DISCRETISATIONS:
            raise ValueError('unknown discretisation %r' % self.disc)
        if not self.meshes or min(self.meshes) < 1:
            raise ValueError('mesh list must contain positive integers')
        if self.case == 'irregular-rhs' and any(m % 2 == 0 for m in self.meshes):
            raise ValueError('irregular-rhs needs odd M so the kink sits on a node')
        if self.samples_per_step < 2:
            raise ValueError('samples_per_step must be at least 2')
        for M in self.meshes:
            if self.time_const / (M + 1) ** 2 > self.T:
                raise ValueError('time step c h^2 exceeds T for M=%d' % M)

    @classmethod
    def from_json(cls, path, **overrides):
        with open(path) as fh:
            data = json.load(fh)
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError('unknown config keys: %s' % ', '.join(sorted(unknown)))
        data.update({k: v for k, v in overrides.items() if v is not None})
        if 'windows' in data and data['windows'] is not None:
            data['windows'] = {k: tuple(v) for k, v in data['windows'].items()}
        return cls(**data)

    def grid(self, M):
        h = 1.0 / (M + 1)
        return TimeGrid.from_max_step(self.T, self.time_const * h * h)


@dataclass
class CaseResult:
    config: ExperimentConfig
    reports: list
    extras: list = field(default_factory=list)
    rates: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    exit_code: int = EXIT_OK


def run_mesh(config, M):
    """Solve on one mesh and evaluate every error functional.

    Returns (ErrorReport, extras) where extras holds the residual, the
    interpolant distance (if requested) and timings.
    """
    u = CASES[config.case](T=config.T)
    D = DISCRETISATIONS[config.disc](M)
    grid = config.grid(M)
    t0 = time.perf_counter()
    sol = solve(D, u.spec, grid)
    t1 = time.perf_counter()
    res = scheme_residual(D, u.spec, grid, sol)
    rep = evaluate_errors(u, D, u.spec, grid, sol, M, config.samples_per_step, res)
    extras = {'M': M, 'residual': res, 'solve_s': t1 - t0,
              'errors_s': time.perf_counter() - t1}
    if config.interpolation:
        interp = interpolate_space_time(D, grid, u, u.spec.weight(D))
        d = space_time_distance(u, D, u.spec, grid, interp, config.samples_per_step)
        extras['interp_delta_T'] = d['delta_T']
        extras['ratio'] = rep.delta_T / (rep.zeta_T + d['delta_T'])
    return rep, extras


def _run_mesh_args(args):
    return run_mesh(*args)


def _workers(config, count):
    cap = os.environ.get('GDM_THREADS')
    n = config.workers or os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, min(n, count))


def run_case(config, log=None):
    """Run every mesh (in parallel when allowed), merge in mesh order,
    extract rates and check them against the configured windows."""
    meshes = list(config.meshes)
    nw = _workers(config, len(meshes))
    try:
        if nw == 1:
            out = [run_mesh(config, M) for M in meshes]
        else:
            with ProcessPoolExecutor(nw) as ex:
                out = list(ex.map(_run_mesh_args, [(config, M) for M in meshes]))
    except Exception as exc:  # any solver or evaluation failure
        res = CaseResult(config, [], failures=['solver failure: %s' % exc])
        res.exit_code = EXIT_SOLVER
        return res
    reports = [r for r, _ in out]
    extras = [e for _, e in out]
    result = CaseResult(config, reports, extras)
    for e in extras:
        if e['residual'] > RESIDUAL_TOL:
            result.failures.append('scheme residual %.3g at M=%d' % (e['residual'], e['M']))
            result.exit_code = EXIT_SOLVER
    if len(reports) >= 3:
        for q in ('E1', 'E2'):
            vals = [getattr(r, q) for r in reports]
            if min(vals) > 0:
                result.rates[q] = convergence_rate([(r.h, v) for r, v in zip(reports, vals)])
    for q, (lo, hi) in config.windows.items():
        s = result.rates.get(q)
        if s is None or not lo <= s <= hi:
            result.failures.append('%s rate %s outside [%g, %g]' % (q, s, lo, hi))
            if result.exit_code == EXIT_OK:
                result.exit_code = EXIT_RATE
    if config.out:
        write_csv(config.out, reports)
    return result


def write_csv(path, reports):
    with open(path, 'w', newline='') as fh:
        w = csv.writer(fh, lineterminator='\n')
        w.writerow(CSV_COLUMNS)
        for r in reports:
            w.writerow(['%.12g' % v for v in r.row()])


def read_csv(path, required=('h',)):
    with open(path, newline='') as fh:
        rows = list(csv.DictReader(fh))
    cols = rows[0].keys() if rows else []
    if not rows:
        raise ValueError('%s has no data rows' % path)
    missing = [c for c in required if c not in cols]
    if missing:
        raise ValueError('%s lacks columns: %s' % (path, ', '.join(missing)))
    return {c: np.array([float(r[c]) for r in rows]) for c in cols}


def rates_from_csv(path, quantities=('E1', 'E2')):
    data = read_csv(path, ('h',) + tuple(quantities))
    return {q: convergence_rate(list(zip(data['h'], data[q]))) for q in quantities}


def run_lemmas(seed=0, count=1000, zero=False, tamper=False, tamper_scale=10.0):
    """Run the randomised lemma suite; returns (summary, exit_code, message).

    With ``tamper`` the inf-sup constant is multiplied by ``tamper_scale``.
    """
    if count < 1:
        raise ValueError('count must be at least 1')
    summary = run_lemma_suite(seed, count, zero=zero, beta_scale=tamper_scale if tamper else 1.0)
    failing = [(n, s) for n, s in summary.items() if s['failed']]
    if not failing:
        return summary, EXIT_OK, 'all %d instances passed' % count
    name, s = failing[0]
    return summary, EXIT_RATE, '%s failed on %d instances, first seed %s' % (
        name, s['failed'], s['first_failure'])
