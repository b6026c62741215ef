# %% [markdown]
# # Regime map of the sparse mixture
#
# Each (beta, r) cell is assigned a regime and the rate function that governs
# its error exponents.  The printout is a coarse ASCII picture of the plane.

# %%
import collections

from sparsemix.experiments import emit_regime_map, regime_map_grid
from sparsemix.regimes import classify, critical_r

# %%
grid = regime_map_grid(100)
rows = emit_regime_map(grid, grid, "sparse_r")
print(collections.Counter(r["regime"] for r in rows))

# %% [markdown]
# The detection boundary: below r = critical_r(beta) no test beats guessing.

# %%
for beta in (0.55, 0.6, 0.75, 0.9, 0.99):
    print(f"beta={beta:.2f}  critical r={critical_r(beta):.4f}")

# %%
symbol = {"undetectable": ".", "moderately_sparse_weak": "w", "moderate": "m",
          "strong": "S", "on_boundary": "|", "dense_weak": "d"}
for r in reversed(regime_map_grid(20)):
    line = "".join(symbol.get(classify(float(b), float(r)).regime.value, "?") for b in regime_map_grid(20))
    print(f"r={r:.3f} {line}")
