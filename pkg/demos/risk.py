"""
Responsibility and irreversibility
==================================

Two quantities worsen as AI decision energy grows: the traceability of an
outcome back to a human originator falls, and the chance that at least one
of many low-risk actions is irreversible rises toward certainty.
"""
import numpy as np

from sovsim import EconomyParams
from sovsim.metrics import count_paths, irreversibility_from_counts, make_trace_dag, traceability_bound
from sovsim.verification import monte_carlo_irreversibility

econ = EconomyParams(beta=1.0, gamma=1.0)
for e in (0.0, 10.0, 30.0, 99.0, 999.0):
    dag = make_trace_dag(e, 1.0, branch_coeff=0.1, outcome_depth=3)
    stats = count_paths(dag)
    print(f"E_AI {e:6.0f}  bound {traceability_bound(e, econ):.4f}  "
          f"DAG paths {stats.total_paths:8d}  human-origin share {stats.empirical_traceability:.4f}")

# One loss in a hundred per action, many actions per period.
ns = np.array([1, 10, 100, 1000])
print("P_irr at p=0.01:", [round(irreversibility_from_counts(int(n), 0.01), 6) for n in ns])
est, se = monte_carlo_irreversibility(0.01, 100, 10**5, seed=1)
print(f"simulated at N=100: {est:.4f} +- {se:.4f}")
print("p=1e-4 over 1e5 actions:", irreversibility_from_counts(10**5, 1e-4))
