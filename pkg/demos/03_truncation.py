"""Why the closed-form supremum matters.

Dropping the closed form of sup_t f_t and keeping only rows t <= N gives a
strictly larger feasible set: x1 can be very negative as long as
x1/N - x2 <= 0 still lets x2 sit near -1.  The truncated optimum is -1 for
every finite N, while the full problem has optimum 0.
"""
from ciplab import corpus
from ciplab.duality import solve_primal

full, _ = corpus.example2()
trunc, _ = corpus.example2(with_sup=False)

exact = solve_primal(full)
print(f"closed form      inf(P) = {exact.value: .6f}  exact={exact.exact}")
for N in (3, 10, 100):
    r = solve_primal(trunc, N=N)
    print(f"truncated N={N:<4} inf(P) = {r.value: .6f}  exact={r.exact}  at x = {r.witness}")
