"""How many simulations per iterate on K0 cores?

Fits the rho(K) curve on the exponential model and evaluates the variance
per unit cost when I = c / ceil(K/K0) iterations are affordable.
"""

from rvcv.experiments import EXAMPLES, config_from_dict, run_experiment

doc = dict(EXAMPLES["k-allocation"], replicates=3)
report = run_experiment(config_from_dict(doc), workers=1)
fit = report.rho_fit
print(f"rho_inf {fit['rho_inf']:.4f}  C {fit['C']:.3f}  rho(1)/rho_inf {fit['ratio_rho1_rhoinf']:.3f}")
for a in report.extra["allocation"]:
    curve = " ".join(f"{v * 1e3:.3f}" for v in a["r"])
    print(f"K0={a['K0']}: best K={a['argmin_K']}   r(K) x 1e3 for K=1..{4 * a['K0']}: {curve}")
