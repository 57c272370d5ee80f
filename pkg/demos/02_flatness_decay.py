"""Watch the velocity flatness of random fields settle towards -3/2.

Both the exact and the linearized inverse transforms are tracked, median over seeds.
Run: python3 demos/02_flatness_decay.py
"""
from qburgers.fields import GridSpec, PhysicsParams
from qburgers.reference import ASYMPTOTIC_BETA, run_figure2_batch

taus = [0.0, 0.0025, 0.005, 0.01, 0.015, 0.02]
runs, med = run_figure2_batch(GridSpec(7), 0.3, 5, range(24), PhysicsParams(0.01), taus, "domain")

print(f"Seed median over {len(runs)} random fields (128 points, nu = 0.01).")
print(f"{'tau':>8} {'beta exact':>12} {'beta approx':>12}")
for t, be, ba in zip(med.taus, med.beta_exact, med.beta_approx):
    print(f"{t:8.4f} {be:12.4f} {ba:12.4f}")
print(f"Asymptote: {ASYMPTOTIC_BETA}")
