"""
How fast does the statistic reach its limit law?
================================================

Simulate the Kendall statistic under the null hypothesis and measure the
Kolmogorov-Smirnov distance of its empirical distribution to the Kolmogorov
law, normalizing once with the estimated and once with the true long-run
deviation.
"""

from rank_cusum import kolmogorov_quantile, run_convergence_experiment

print("95% critical value:", round(kolmogorov_quantile(0.95), 4))

for model in (1, 2):
    print(f"model {model}")
    for res in run_convergence_experiment(model, [20, 100, 500], reps=1000, seed=11):
        print(f"  n={res.n:4d}  estimated D: {res.sup_estimated:.3f}   known D: {res.sup_known:.3f}")
