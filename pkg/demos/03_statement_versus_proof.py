# Two entries exist in two readings. The checker evaluates both and reports what it sees.
# Run: python3 demos/03_statement_versus_proof.py
from hardycheck.catalog import Params, inequality_constant, instantiate_task
from hardycheck.verifier import falsify, verify

# thm34 with and without the phi(x)psi(x) denominator on the left
b = {"f": "min(x,1)", "g": "min(x,1)", "phi": "x", "psi": "x"}
for form in ("proof", "statement"):
    v = verify(instantiate_task("thm34", Params(p=3), b, form=form))
    print(f"thm34 {form:9s}: lhs={v.lhs.value} ({v.lhs.status.value}) rhs={v.rhs:.6f} "
          f"-> {v.outcome} {v.diagnostic}")

# thm32: the constant used in the argument and the one as stated disagree
P = Params(p=0.5, a=2.0, q=1.5)
print("thm32 constants: proof", inequality_constant("thm32", P),
      "statement", inequality_constant("thm32-statement", P))
for entry in ("thm32", "thm32-statement"):
    res = falsify(entry, trials=30, seed=1)
    print(f"{entry}: {res.counts}, min ratio {res.worst_ratio:.4f}")

# one frozen witness against the proof constant, cross-checked with mpmath elsewhere
v = verify(instantiate_task("thm32", Params(p=0.49673, q=0.75506, a=0.17620),
                            {"f": "1.33302*min(x,2.56845)", "g": "0.957952*x^1.2461"}))
print(f"witness: lhs {v.lhs.value:.8f} +- {v.lhs.err_bound:.1e}, C*rhs {v.rhs:.6f}, "
      f"ratio {v.ratio:.4f} -> {v.outcome}")
