"""Loss of coherence between two momentum branches +U0 and -U0.

Each collision multiplies the branch overlap by sech(K.U0), so coherence decays
faster for well separated branches. The fitted rate is compared with the
analytic estimate gamma_D for a few separations.
"""
import numpy as np

from qlbe.config import parse_config
from qlbe.experiments import run
from qlbe.physics import decoherence_rate_analytic

print(f"{'U0':>4} {'model':>9} {'gamma_D':>9} {'fit':>9} {'rel':>7}")
for model in ("constant", "gaussian"):
    for u0 in (1.0, 2.0, 4.0):
        gd = decoherence_rate_analytic(u0, parse_config(f"cross_section = {model}").gas.cross_section)
        cfg = parse_config(f"""
        experiment = decohere
        cross_section = {model}
        u0 = 0,0,{u0}
        n_realizations = 5000
        t_final = {1.3 * np.log(100) / gd}
        n_output_times = 81
        """)
        fit = run(cfg).fit["gamma_D_fit"]
        print(f"{u0:4.1f} {model:>9} {gd:9.4f} {fit:9.4f} {fit / gd - 1:+7.1%}")
