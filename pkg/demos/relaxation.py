"""Momentum relaxation of a light test particle.

A sharp momentum state at U0 = (1,0,0) is kicked by gas particles ten times
heavier. The squared mean momentum decays at the relaxation rate gamma_R and
the mean energy approaches its thermal value 3m/2M.
"""
import numpy as np

from qlbe.config import parse_config
from qlbe.experiments import run
from qlbe.physics import relaxation_rate

cfg = parse_config("""
experiment = relax
mass_ratio = 0.1
t_final = 40
n_output_times = 81
n_realizations = 4000
master_seed = 1
""")
table = run(cfg)
t = table["time"]

print(f"gamma_R analytic = {relaxation_rate(cfg.gas):.4f}")
print(f"gamma_R fitted   = {table.fit['gamma_R_fit']:.4f}  (R^2 {table.fit['gamma_R_fit_r2']:.4f})")

print(f"{'t':>6} {'<U>^2':>9} {'+-':>7} {'approx':>9} {'<U^2>':>9} {'approx':>9}")
for i in range(0, t.size, 8):
    print(f"{t[i]:6.1f} {table['meanU_sq'][i]:9.4f} {table['meanU_sq_se'][i]:7.4f} "
          f"{table['approx_meanU_sq'][i]:9.4f} {table['mean_Usq'][i]:9.4f} {table['approx_mean_Usq'][i]:9.4f}")

print("thermal <U^2> =", 1.5 * cfg.mass_ratio, " late average =",
      np.round(table["mean_Usq"][-10:].mean(), 4))
