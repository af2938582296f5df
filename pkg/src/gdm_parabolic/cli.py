"""Command line entry point: gdm-parabolic <subcommand> ..."""

import argparse
import sys

from .experiments import (EXIT_OK, ExperimentConfig, rates_from_csv,
                          run_case, run_lemmas)
from .svgplot import emit_plot

EXIT_INPUT = 1

CASE_COMMANDS = {
    'run-case1': 'irregular-initial',
    'run-case2': 'irregular-rhs',
    'run-periodic': 'periodic',
}


def _mesh_list(text):
    return tuple(int(s) for s in text.replace(' ', '').split(',') if s)


def _add_case_args(p):
    p.add_argument('--config', help='JSON file with ExperimentConfig fields')
    p.add_argument('--case', help='override the case id')
    p.add_argument('--mesh-list', type=_mesh_list, help='comma separated M values')
    p.add_argument('--time-const', type=float, help='c in k = c h^2')
    p.add_argument('--T', type=float, dest='T', help='final time')
    p.add_argument('--disc', choices=('cvfe', 'p1'))
    p.add_argument('--out', help='CSV output path')
    p.add_argument('--seed', type=int)
    p.add_argument('--samples-per-step', type=int)
    p.add_argument('--interpolation', action='store_true',
                   help='also report the interpolant distance and the bound ratio')
    p.add_argument('--plot', help='also write an SVG plot of E1, E2')


def build_parser():
    ap = argparse.ArgumentParser(prog='gdm-parabolic',
                                 description='Implicit Euler gradient schemes: experiments and checks.')
    sub = ap.add_subparsers(dest='command', required=True)
    for name, case in CASE_COMMANDS.items():
        p = sub.add_parser(name, help='run the %s convergence study' % case)
        _add_case_args(p)
        p.set_defaults(default_case=case)
    p = sub.add_parser('run-lemmas', help='randomised checks of the operator inequalities')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--count', type=int, default=1000)
    p.add_argument('--zero', action='store_true', help='use zero vectors only')
    p.add_argument('--tamper', action='store_true',
                   help='self-test: inflate the inf-sup constant (see --tamper-scale)')
    p.add_argument('--tamper-scale', type=float, default=10.0,
                   help='inflation factor for --tamper (default 10)')
    p = sub.add_parser('rates', help='print least-squares rates from a CSV')
    p.add_argument('csv')
    p = sub.add_parser('plot', help='write a log-log SVG plot from a CSV')
    p.add_argument('csv')
    p.add_argument('svg')
    return ap


def _config(args):
    overrides = {
        'case': args.case or args.default_case,
        'meshes': args.mesh_list, 'time_const': args.time_const, 'T': args.T,
        'disc': args.disc, 'out': args.out, 'seed': args.seed,
        'samples_per_step': args.samples_per_step,
        'interpolation': args.interpolation or None,
    }
    if args.config:
        if args.case is None:
            overrides.pop('case')
        return ExperimentConfig.from_json(args.config, **overrides)
    return ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})


def _cmd_case(args):
    try:
        cfg = _config(args)
    except (OSError, ValueError) as exc:
        print('error: %s' % exc, file=sys.stderr)
        return EXIT_INPUT
    print('case %s, meshes %s, k = %g h^2, T = %g, %s' % (
        cfg.case, ','.join(map(str, cfg.meshes)), cfg.time_const, cfg.T, cfg.disc))
    res = run_case(cfg)
    if res.reports:
        print('%6s %10s %6s %12s %12s %12s %12s %12s' % ('M', 'h', 'N', 'E1', 'E2', 'riesz_gap', 'zeta_T', 'delta_T'))
        for r, e in zip(res.reports, res.extras):
            line = '%6d %10.4g %6d %12.5e %12.5e %12.5e %12.5e %12.5e' % (
                r.M, r.h, r.N, r.E1, r.E2, r.riesz_gap, r.zeta_T, r.delta_T)
            if 'ratio' in e:
                line += '  interp %.4e ratio %.3f' % (e['interp_delta_T'], e['ratio'])
            print(line)
    for q, s in res.rates.items():
        print('rate %s: %.4f' % (q, s))
    for f in res.failures:
        print('FAIL: %s' % f)
    if cfg.out:
        print('wrote %s' % cfg.out)
        if args.plot:
            emit_plot(cfg.out, args.plot)
            print('wrote %s' % args.plot)
    return res.exit_code


def _cmd_lemmas(args):
    try:
        summary, code, msg = run_lemmas(args.seed, args.count, args.zero, args.tamper, args.tamper_scale)
    except ValueError as exc:
        print('error: %s' % exc, file=sys.stderr)
        return EXIT_INPUT
    for name, s in summary.items():
        print('%-12s passed %5d  failed %5d  worst relative slack %+.3e' % (
            name, s['passed'], s['failed'], s['worst']))
    print(('FAIL: ' if code else '') + msg)
    if args.tamper:
        if code:
            print('self-test: failure detected as expected')
        else:
            print('self-test: constant x%g still holds; the exact discrete inf-sup '
                  'constant exceeds it on every instance' % args.tamper_scale)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command in CASE_COMMANDS:
        return _cmd_case(args)
    if args.command == 'run-lemmas':
        return _cmd_lemmas(args)
    try:
        if args.command == 'rates':
            for q, s in rates_from_csv(args.csv).items():
                print('%s: %.4f' % (q, s))
            return EXIT_OK
        emit_plot(args.csv, args.svg)
        print('wrote %s' % args.svg)
        return EXIT_OK
    except (OSError, ValueError) as exc:
        print('error: %s' % exc, file=sys.stderr)
        return EXIT_INPUT


if __name__ == '__main__':
    sys.exit(main())
