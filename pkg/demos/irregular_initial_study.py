"""Heat equation started from u0 = 1 (incompatible with the boundary values).

The solution is only H^(1/2)-smooth at t = 0, so both error measures should
decay like sqrt(h).  Pass --full to use the M = 31..255 sequence.
"""
import sys

from gdm_parabolic import ExperimentConfig, run_case

meshes = (31, 63, 127, 255) if '--full' in sys.argv else (15, 31, 63)
res = run_case(ExperimentConfig(case='irregular-initial', meshes=meshes, windows={}))
print('%5s %10s %12s %12s %12s' % ('M', 'h', 'E1', 'E2', 'riesz_gap'))
for r in res.reports:
    print('%5d %10.6f %12.4e %12.4e %12.4e' % (r.M, r.h, r.E1, r.E2, r.riesz_gap))
print('slopes: E1 %.3f  E2 %.3f  (expected ~0.5)' % (res.rates['E1'], res.rates['E2']))
