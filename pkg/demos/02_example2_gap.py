"""Second counterexample: a strict gap between sup(D) and the limiting value.

minimise x2 subject to x1 <= 0, -x2 <= 1 and x1/t - x2 <= 0 for t >= 3.
The primal optimum is 0 and the sup-dual reaches it, while both
Lagrangian duals stop at -1.
"""
from ciplab import cli, corpus
from ciplab.duality import solve_D1, sup_dual_function, value_v1
from ciplab.haar import detect_linear, haar_dual

p, truth = corpus.example2()

report = cli.analyze(p)
print(cli.format_report(report))
print()

# The problem is a linear semi-infinite program, so the Haar dual applies
# and is solved exactly: -1 with all weight on the row t = 2.
haar = haar_dual(detect_linear(p))
print("Haar dual:", haar.value, haar.multiplier, haar.status.name)

# v1(eps) = -eps, so the limit is 0 and sits strictly above sup(D) = -1.
for eps in (1.0, 0.1, 0.01, 0.001):
    print(f"v1({eps:g}) = {value_v1(p, eps):.6f}")

# The sup-dual function at s = 1 is already 0: x2 + h(x) >= 0 everywhere.
print("phi1(1) =", sup_dual_function(p, 1.0).value)
print("sup(D1) =", solve_D1(p).value)
