# %% [markdown]
# # A lower bound on low-degree estimation error
#
# A degree-D polynomial of the observations cannot estimate x much better than
# its mean 1/n when rho is tiny. The excess over the trivial error is
# controlled by zeta.

# %%
from graphalign.lowdegree import LowDegreeParams, closed_form_excess, mmse_lower_bound, trivial_mmse, zeta

lp = LowDegreeParams(D=1, rho=0.01, n=100, variant="theorem")
print(f"zeta={zeta(lp):.4f}  bound={mmse_lower_bound(lp):.5g}  trivial={trivial_mmse(100):.5g}")

# %% [markdown]
# On tiny graphs the truncated sum can be enumerated exactly and compared with
# the closed form.

# %%
from graphalign.lowdegree import ws_truncated_sum

for D in (0, 1, 2):
    w = ws_truncated_sum(6, 1e-3, D)
    cf = closed_form_excess(LowDegreeParams(D, 1e-3, 6, "appendix-p2")) if D else 0.0
    print(f"D={D}: {w.count:>5} alphas, excess {float(w.excess):.3e} <= closed form {cf:.3e}")
