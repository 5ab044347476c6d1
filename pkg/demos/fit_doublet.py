"""
Fitting a measured doublet
==========================

Generate a noisy doublet with the parameters of a real microtoroid
measurement (units of 2pi MHz), save it as CSV, read it back and fit the
four resonator parameters. Then calibrate the atom coupling of a second
spectrum with the resonator held fixed.
"""

import numpy as np

from wgmscatter import SystemParams, fit_full, fit_wr, load_spectrum, synthesize_spectrum

truth = SystemParams(h=7.64947, kappa_c=0.250879, gamma_ext=0.0194301)
grid = np.linspace(-8.4, 8.4, 201)
synthesize_spectrum(truth, grid, model="wr", noise=0.01, seed=0, unit="2pi-MHz").to_csv("doublet.csv")

spec = load_spectrum("doublet.csv")
res = fit_wr(spec, seed=0)
for name in ("omega_c", "h", "kappa_c", "gamma_ext"):
    print(f"{name:>10s} = {res.fitted[name]:.6g}")
print(f"splitting = {res.splitting:.6g}, rms residual = {res.residual:.3g}, converged = {res.converged}")

# Second step: the resonator is known, only g is free.
atom = SystemParams(g_a=6, g_b=6, h=-9.6, kappa_q=0.16, kappa_c=0.76, gamma_ext=0.44)
spec2 = synthesize_spectrum(atom, np.linspace(-20, 20, 401), noise=0.01, seed=1, unit="2pi-MHz")
res2 = fit_full(spec2, fixed=["omega_c", "h", "kappa_c", "gamma_ext", "omega_atom", "kappa_q"],
                init=atom.replace(g_a=3.0, g_b=3.0))
print(f"fitted g = {res2.fitted['g']:.5f} (true 6)")
