"""u = t min(x, 1 - x): a kink in space, a Dirac source on the midpoint.

With odd M the kink sits on a mesh node.  E1 then converges at second
order and E2 at first order.
"""
import sys

from gdm_parabolic import ExperimentConfig, run_case

meshes = (31, 63, 127, 255) if '--full' in sys.argv else (7, 15, 31, 63)
res = run_case(ExperimentConfig(case='irregular-rhs', meshes=meshes, interpolation=True, windows={}))
print('%5s %12s %12s %12s %12s %8s' % ('M', 'E1', 'E2', 'zeta_T', 'delta_T', 'ratio'))
for r, e in zip(res.reports, res.extras):
    print('%5d %12.4e %12.4e %12.4e %12.4e %8.4f' % (r.M, r.E1, r.E2, r.zeta_T, r.delta_T, e['ratio']))
print('slopes: E1 %.3f (expected ~2)  E2 %.3f (expected ~1)' % (res.rates['E1'], res.rates['E2']))
