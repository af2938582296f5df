"""Time-periodic problem u(0) = u(T) with a manufactured solution a(t) sin(pi x).

The whole time history is coupled through the boundary operator, which the
solver handles with an affine propagation and one extra linear solve.
"""
from gdm_parabolic import ExperimentConfig, run_case

res = run_case(ExperimentConfig(case='periodic', meshes=(15, 31, 63, 127)))
for r, e in zip(res.reports, res.extras):
    print('M=%4d  E1 %.4e  E2 %.4e  residual %.2e' % (r.M, r.E1, r.E2, e['residual']))
print('slopes: E1 %.3f  E2 %.3f' % (res.rates['E1'], res.rates['E2']))
