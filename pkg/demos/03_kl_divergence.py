# %% [markdown]
# # How far apart are two alignments, in KL?
#
# Moving one graph by a transposition changes the law of the observations.
# The divergence per moved edge has a closed form. A transposition of u and u'
# moves every edge touching exactly one of them, which is 2(n-2) edges. Edge
# {u, u'} itself stays put. A commonly quoted count is 2n-3. The Monte Carlo
# estimate below shows which count is right.

# %%
from graphalign.core import ProblemParams, transposition
from graphalign.information import kl_monte_carlo, kl_transposition, kl_transposition_exact

for n, p, rho in [(4, 2, 0.5), (6, 3, 0.3), (5, 5, 0.2)]:
    est = kl_monte_carlo(transposition(n, 0, 1), ProblemParams(n, p, rho), 100_000, seed=2024)
    exact, quoted = kl_transposition_exact(n, p, rho), kl_transposition(n, p, rho)
    print(f"n={n} p={p} rho={rho}: MC {est.mean:.4f} +- {est.std_error:.4f} | "
          f"2(n-2) edges {exact:.4f} (z={(est.mean - exact) / est.std_error:+.1f}) | "
          f"2n-3 edges {quoted:.4f} (z={(est.mean - quoted) / est.std_error:+.1f})")

# %% [markdown]
# Fano's inequality turns these divergences into lower bounds on the error of
# any estimator.

# %%
from graphalign.information import fano_exact_bound, fano_partial_bound

for rho in (0.001, 0.01, 0.05):
    print(f"rho={rho}: P(exact fails) >= {fano_exact_bound(200, 2, rho):.3f}, "
          f"E[err] >= {fano_partial_bound(200, 2, rho):.3f}")
