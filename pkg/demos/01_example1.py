"""First counterexample: the ordinary Lagrangian dual misses the optimum.

minimise exp(x2) subject to f1(x) <= 0, where f1 = x1 on {x2 >= 0} and
+inf elsewhere.  The feasible set is {x1 <= 0, x2 >= 0}, so inf(P) = 1,
yet the Lagrangian over the whole plane only reaches 0.
"""
from ciplab import corpus
from ciplab.duality import limiting_value, strong_slater, weak_duality_audit

p, truth = corpus.example1()

# The four values and their ordering
audit = weak_duality_audit(p)
print(audit.chain_line())
for k, v in audit.values().items():
    print(f"  {k:<7}{v: .6f}   (reference {getattr(truth, k)})")

# sup(D0) = 0 comes from lambda -> inf: exp(x2) + lam*x1 drops to 0 as
# x2 -> -inf, where f1 is +inf and the term is not counted.  D restricts
# x to the domain of every f_t and recovers the primal value.

cert = strong_slater(p)
print("strong Slater point:", cert.a, "margin", cert.alpha)

sweep = limiting_value(p)
print("limiting value of v1 as eps -> 0:", sweep.limit_estimate)
