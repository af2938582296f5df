"""Seeded random checks of the functional-analytic inequalities.

Every instance is reproducible from its (seed, index) pair.  The last part
inflates the inf-sup constant to show how much room the bound leaves.
"""
import numpy as np

from gdm_parabolic import TimeGrid, WeightOperator, build_cvfe, discrete_infsup, infsup_constant
from gdm_parabolic import coercivity_constant, run_lemma_suite
from gdm_parabolic.solver import ZeroPhi

out = run_lemma_suite(seed=0, count=200)
for name, s in out.items():
    print('%-12s passed %4d  failed %d  worst relative slack %+.3e' % (name, s['passed'], s['failed'], s['worst']))

D = build_cvfe(15)
S = WeightOperator.identity(D.ncells_g)
lam = np.ones(D.ncells_g)
p = coercivity_constant(D)
for T in (1e-2, 1e-1, 1.0):
    grid = TimeGrid(T, 16)
    beta, _ = discrete_infsup(D, S, lam, grid, ZeroPhi())
    bhat = infsup_constant(1.0, 1.0, p, T, 0.0)['beta_hat']
    print('T=%-5g discrete inf-sup %.4e  guaranteed %.4e  ratio %.1f' % (T, beta, bhat, beta / bhat))

for scale in (10, 25):
    bad = run_lemma_suite(seed=0, count=50, beta_scale=scale)['infsup']
    print('beta_hat x%d: %d of 50 instances violate the bound' % (scale, bad['failed']))
