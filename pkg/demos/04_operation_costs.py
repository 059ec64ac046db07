"""What signing actually costs, measured rather than asserted.

Instruments the signer across ring sizes and prints the exponentiation
counts next to the budget line 5*l + k + 2.  The measured count grows as
2*l + 3 — the budget is a generous ceiling, not a prediction.
"""

from ringauction.harness import ScenarioConfig, efficiency_sweep, run_scenario

summary = efficiency_sweep(ring_sizes=(1, 2, 4, 8, 16), k=160)
print(summary.table)
print()
print(f"slope (exponentiations per extra ring member): {summary.slope:.2f}")
print(f"every row within budget: {summary.all_within_budget}")
print(f"exactly one message hash per signing: {summary.one_hash_per_signing}")

print()
print("=== full-scenario phase breakdown ===")
config = ScenarioConfig(bidders=4, rounds=2, auctions=1, k=16, seed=11)
result = run_scenario(config)
for phase, counts in result.report.phases.items():
    pretty = ", ".join(f"{op}={v}" for op, v in sorted(counts.items()))
    print(f"  {phase:<12} {pretty}")
print()
print("Pairings concentrate in the winner and open phases — verification is")
print("lazy, so losing bids that nobody challenges are never paired at all.")
