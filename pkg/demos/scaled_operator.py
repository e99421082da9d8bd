"""How the spectrum moves as the endpoint scaling a approaches 1."""

import numpy as np

from liouville_dmd import KernelSpec, fit, hausdorff, segment_all, synthesize

trajs = segment_all(synthesize("oscillator", 10, T=1.0, dt=0.005, seed=0), 40, 40)
kernel = KernelSpec.gaussian(5.0)
ref = fit(trajs, kernel).eigenvalues

for a in (0.9, 0.99, 0.999, 0.9999):
    lam = fit(trajs, kernel, a=a).eigenvalues
    near_i = lam[np.argmin(np.abs(lam - 1j))]
    print(f"a={a:<7} Hausdorff to a=1: {hausdorff(lam, ref):.4f}   eigenvalue nearest i: {near_i:.5f}")

# Harmonics k*i shrink roughly like a**k, so the high-order part of the
# spectrum is what keeps the distance large at a=0.99.
