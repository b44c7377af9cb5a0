"""Total collision rate of a test particle for the two cross-section models.

Prints the closed forms next to direct quadrature over momentum transfer.
"""
import numpy as np

from qlbe.physics import CrossSectionModel, total_rate, total_rate_quadrature

const = CrossSectionModel.constant()
gauss = CrossSectionModel.gaussian(1.0)

# a particle at rest still collides: Gamma(0) = 2/sqrt(pi) for a constant cross section
print(f"Gamma(0) constant = {total_rate(0.0, const):.6f}  (2/sqrt(pi) = {2 / np.sqrt(np.pi):.6f})")

print(f"{'U':>5} {'constant':>10} {'quad':>10} {'gaussian':>10} {'quad':>10}")
for U in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0):
    gc = total_rate(U, const)
    gg = total_rate(U, gauss)
    qc = total_rate_quadrature(U, const.sigma)
    qg = total_rate_quadrature(U, gauss.sigma)
    print(f"{U:5.1f} {gc:10.6f} {qc:10.6f} {gg:10.6f} {qg:10.6f}")

# fast particles: the constant rate grows like U, the Gaussian one like 1/U
U = np.array([10.0, 20.0, 40.0])
gc = np.array([total_rate(u, const) for u in U])
gg = np.array([total_rate(u, gauss) for u in U])
print("Gamma/U, constant:", np.round(gc / U, 4))
print("Gamma*U, gaussian:", np.round(gg * U, 4))
