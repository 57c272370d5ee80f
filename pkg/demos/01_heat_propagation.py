"""Evolve a plane-wave psi with the heat propagator and check it against the closed form.

Run: python3 demos/01_heat_propagation.py
"""
from qburgers.fields import GridSpec, PhysicsParams, PlaneWaveIC, make_plane_wave_ic
from qburgers.heat import block_encode, build_laplacian, norm_ratio, propagate_psi
from qburgers.reference import analytic_psi_plane_wave

grid, phys, ic = GridSpec(8), PhysicsParams(0.05), PlaneWaveIC(0.2, 1)
psi0 = make_plane_wave_ic(grid, ic)

print("Plane wave on 256 points, delta = 0.2.")
print(f"{'tau':>8} {'max |numeric - discrete closed form|':>38} {'norm ratio':>12}")
for tau in (0.0, 10.0, 100.0, 1000.0):
    num = propagate_psi(psi0, tau).values
    ref = analytic_psi_plane_wave(ic, grid, phys, tau, kind="discrete").values
    print(f"{tau:8.1f} {abs(num - ref).max():38.2e} {norm_ratio(psi0, tau):12.6f}")

small = GridSpec(5)
A = build_laplacian(small)
U = block_encode(A)
print(f"\nStencil spectral norm at N=32: {A.spectral_norm():.6f} (never above 4)")
print(f"Dilation top-left block error vs A/6: {abs(U.block() - A.dense() / 6).max():.1e}")
print(f"Dilation unitarity defect: {U.unitarity_defect():.1e}")
