"""Smoke test for the pywaveguide extension module.

Build and run from the workspace root:

    cargo build -p waveguide-modal-py --release --features extension-module
    cp target/release/libpywaveguide.so python/pywaveguide.so
    python3 python/smoke_test.py
"""

import cmath
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pywaveguide as pw


def check(cond, msg):
    if not cond:
        raise SystemExit("FAIL: " + msg)
    print("ok  " + msg)


spec = pw.TransverseSpectrum.rectangle(1.0, 0.5, n=5)
ev = spec.eigenvalues
check(len(spec) == 5 and abs(ev[1] - math.pi ** 2) < 1e-12, "rectangle spectrum")
check(spec.multiplicities()[2] == 2, "multiplicities")
kappa, cls = spec.classify(2.0)[0]
check(cls == "propagating" and abs(kappa - 2j) < 1e-14, "classification")

disk = pw.TransverseSpectrum.disk(1.0, bc="dirichlet", n=1)
check(abs(disk.eigenvalues[0] - 5.783185962946785) < 1e-10, "disk spectrum")

sl = pw.TransverseSpectrum.interval(cells=256, n=2)
check(abs(sl.eigenvalues[1] - math.pi ** 2) / math.pi ** 2 < 1e-2, "Sturm-Liouville")

# u'' = k^2 u - 1 with u(0) = 0 and u'(L) + k u(L) = 0.
k, L, m = 1.0 + 0j, 1.0, 512
u = pw.solve_bvp(k, L, [1.0 + 0j] * (m + 1))
a = -1.0 / (2 * k * k * cmath.exp(k * L))
b = -1.0 / (k * k) - a
exact = [a * cmath.exp(k * z) + b * cmath.exp(-k * z) + 1 / (k * k) for z in (i * L / m for i in range(m + 1))]
err = max(abs(x - y) for x, y in zip(u, exact))
check(err < 1e-5, "1D solver against closed form (max err %.2e)" % err)
check(pw.norm_1k(k, L, u) > 0, "norm_1k")

g = pw.inf_sup_1d(1.0 + 0j, 1.0, 128)
check(abs(g - 1.0) < 1e-9, "inf-sup for real kappa")

c4 = pw.stability_constant_1d(2j, 4.0)
c8 = pw.stability_constant_1d(2j, 8.0)
check(1.7 <= c8 / c4 <= 2.3, "1D stability grows linearly (%.3f)" % (c8 / c4))

reps = pw.uw_infsup([[2.0 + 0j, 0j], [0j, 0.5 + 0j]], [1.0, 1.0], [1.0, 1.0], [0.0, 0.5])
check(abs(reps[0].gamma_computed - 1.0) < 1e-12, "uw inf-sup at beta = 0")
check(abs(reps[1].gamma_computed - reps[1].gamma_bound) < 1e-12, "uw inf-sup attains bound")

r4 = pw.acoustic_uw_infsup(1.0, 0.5, 2.0, 4.0, [1.0])[0]
check(r4.gamma_computed >= r4.gamma_bound - 1e-8, "acoustic uw bound")

stable, margin, eff = pw.perturbation_margin(2.0, 4.0, 1.5, 0.01)
check(stable and abs(margin - 0.88) < 1e-12, "perturbation margin")

modes, total = pw.acoustic_stability(spec, 2.0, 4.0, selection="propagating")
check(total is not None and modes[0][1] == "propagating", "acoustic stability")

alpha, beta, total = pw.maxwell_stability(7.5, 4.0, modes=2)
check(len(alpha) == 2 and len(beta) == 2 and total > 0, "Maxwell stability")

csv = pw.run_config("modes = 3\n", experiment="spectrum")
check(csv.splitlines()[3] == "index,eigenvalue,multiplicity,bc", "run_config")

try:
    spec.classify(math.pi)
except ArithmeticError:
    check(True, "degenerate mode raises ArithmeticError")
else:
    raise SystemExit("FAIL: expected ArithmeticError")

try:
    pw.run_config("bogus = 1\n", experiment="spectrum")
except ValueError as e:
    check("unknown key" in str(e), "config errors raise ValueError")

print("all smoke checks passed")
