"""The seeded simulation engine against its own closed forms.

Every batch is reproducible from (seed, namespace, path index) alone,
horizons are derived from the discount tail automatically, and the
estimates agree with the exact discounted functionals to within
statistical error.
"""
import numpy as np

from lqmarket import (
    NoiseSpec,
    SimConfig,
    build_price_taking_market,
    derive_horizon,
    evaluate_policy,
    simulate,
    solve_riccati,
    stream,
)

market = build_price_taking_market(
    beta=0.995, sigma=0.900, phi1=0.5, phi2=0.25,
    noise=NoiseSpec.diagonal((2.0, 2.0, 0.0)),
    Q=[[2.38, -1.73, -0.15], [-1.73, 2.15, 0.16], [-0.15, 0.16, 0.52]],
    r=0.01, gamma=0.5,
)
system = market.system
x0 = np.array([25.0, 25.0, 50.0])

# streams are pure functions of their coordinates
z1 = stream(seed=42, path_index=7).standard_normal(4)
z2 = stream(seed=42, path_index=7).standard_normal(4)
print("same key, same draws:", np.array_equal(z1, z2))
print("horizon for gamma=0.5, eps=1e-6, per-step bound 1:", derive_horizon(0.5, 1e-6, 1.0))

gain = solve_riccati(system).gain
exact = evaluate_policy(system, gain, x0)
batch = simulate(system, gain, x0, SimConfig(seed=123, n_paths=5000))
print(f"\nauto horizon: {batch.horizon} steps, {batch.n_paths} paths, {batch.n_excluded} excluded")
print(f"{'functional':>12} {'exact':>12} {'simulated':>12} {'std err':>10} {'z':>6}")
for name, est, target in (
    ("cost", batch.cost, exact.cost),
    ("volatility", batch.volatility, exact.volatility),
    ("efficiency", batch.efficiency, exact.efficiency),
):
    z = (est.mean - target) / est.std_error
    print(f"{name:>12} {target:12.3f} {est.mean:12.3f} {est.std_error:10.3f} {z:6.2f}")

again = simulate(system, gain, x0, SimConfig(seed=123, n_paths=5000))
print("\nrerun with the same seed is bit-identical:",
      batch.cost.mean == again.cost.mean and batch.volatility.mean == again.volatility.mean)

other = simulate(system, gain, x0, SimConfig(seed=124, n_paths=5000))
print(f"a different seed moves the estimate: {batch.cost.mean:.3f} vs {other.cost.mean:.3f}")
