# The classical inequality int (F/x)^p <= (p/(p-1))^p int f^p, checked numerically.
# Run: python3 demos/01_classical_hardy.py
import math

import numpy as np

from hardycheck.catalog import Params, instantiate_task
from hardycheck.explorer import hardy_p2_oracle, sharpness_sweep
from hardycheck.quadrature import Interval, integrate
from hardycheck.verifier import verify

# the quadrature engine first: a slowly decaying integrand with a removable 0/0 at the origin
est = integrate(lambda x: (-np.expm1(-x)) ** 2 / x ** 2, Interval(0))
print("int (1-e^-x)^2/x^2 =", est.value, "+-", est.err_bound, "| 2 ln 2 =", 2 * math.log(2))

# f = e^-x gives F = 1 - e^-x, so the left side is exactly that integral
v = verify(instantiate_task("hardy", Params(p=2), {"f": "exp(-x)"}))
print(f"lhs {v.lhs.value:.10f}  C*rhs {v.rhs:.10f}  ratio {v.ratio:.6f}  {v.outcome}")

# the ratio creeps towards 1 along truncated powers x^(-1/p) on [1, T], roughly like 1 - c/ln T
T = np.geomspace(10, 1e8, 8)
sweep = sharpness_sweep(2.0, T)
lhs, rhs = hardy_p2_oracle(T)
for t, r, o in zip(sweep.T, sweep.ratio, lhs / rhs):
    print(f"T={t:9.3g}  quadrature {r:.8f}  closed form {o:.8f}")
print(f"fit: ratio ~ 1 - {sweep.c_unit:.3f}/ln T")

# other exponents have no closed form here but show the same slow approach
for p in (1.5, 3.0):
    s = sharpness_sweep(p, [1e2, 1e4, 1e6])
    print(f"p={p}: ratios", np.round(s.ratio, 4))
