"""
Checking the propositions
=========================

Each check draws random systems and tests one claim at every step.  Trial
counts here are small so the script finishes in seconds; the CLI
(`sovsim verify --props all`) runs the full sizes.
"""
from sovsim.verification import paired_transfer_rates, run_checks

for report in run_checks(trials=20, base_seed=0):
    print(f"{report.property_id}: {report.verdict:4s}  {report.passes}/{report.trials}  witness {report.witness:.4g}")

# Same systems, boundaries on versus off.
print(paired_transfer_rates(trials=50))
