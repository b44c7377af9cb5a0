"""Non-Gaussian transients of the momentum distribution.

Starting from a sharp momentum the distribution is far from Gaussian; the third
and fourth cumulants rise, peak and decay back to zero as the particle
thermalizes with an equal-mass gas.
"""
from qlbe.config import parse_config
from qlbe.experiments import run

cfg = parse_config("experiment = cumulants\nt_final = 6\nn_output_times = 31\nn_realizations = 20000\nseed = 7")
table = run(cfg)

print(f"{'t':>5} {'k2':>8} {'k3':>8} {'+-':>6} {'k4':>8} {'+-':>6}")
for row in range(table.data.shape[0]):
    t = table["time"][row]
    print(f"{t:5.1f} {table['k2'][row]:8.4f} {table['k3'][row]:8.4f} {table['k3_se'][row]:6.4f} "
          f"{table['k4'][row]:8.4f} {table['k4_se'][row]:6.4f}")

for key, value in table.fit.items():
    print(f"{key} = {value:.4g}")
