# Random search over certified admissible functions for each catalog entry.
# On a <= entry the worst ratio is the largest one; on a >= entry it is the smallest,
# and a certified value below 1 there is a violation.
# Run: python3 demos/02_random_falsification.py
from hardycheck.verifier import falsify

for entry in ("hardy", "ws-weighted", "thm31", "thm34", "thm35", "thm36", "thm37", "thm38"):
    res = falsify(entry, trials=40, seed=5)
    w = res.worst
    print(f"{entry:12s} {res.direction} counts={res.counts} worst ratio={res.worst_ratio:.4f}")
    print(f"{'':12s}    at {w.params.to_dict()} {w.bindings}")

# the reverse entry with its proof constant is violated on most samples
res = falsify("thm32", trials=40, seed=5)
print("thm32", res.counts, "min ratio", round(res.worst_ratio, 4))
print("  witness", res.worst.params.to_dict(), res.worst.bindings)
