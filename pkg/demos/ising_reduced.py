"""Ising variance reduction on an 8x8 lattice (a few minutes on one core).

Generates data at theta = 0.4, computes the grid posterior mean with the
transfer recursion and runs the exchange chain with K up to 500.
"""

from rvcv.experiments import EXAMPLES, config_from_dict, run_experiment

doc = dict(EXAMPLES["ising"], proposal_sd=0.12)
doc["model"] = dict(doc["model"], rows=8, cols=8)
report = run_experiment(config_from_dict(doc), workers=1)

oracle = report.extra["oracle_mean"][0]
print(f"grid posterior mean {oracle:.5f}, acceptance {report.extra['acceptance_rate'][0]:.2f}")
print(f"{'K':>4} {'deg':>3} {'plain':>9} {'controlled':>11} {'R':>8}")
for r in report.rows:
    print(f"{r['K']:>4} {r['degree']:>3} {r['mu_plain']:9.5f} {r['mu_controlled']:11.5f} {r['R']:8.1f}")
