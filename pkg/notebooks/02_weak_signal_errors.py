# %% [markdown]
# # Error probabilities of the likelihood ratio test
#
# Direct Monte Carlo at moderate n, importance sampling where the errors get
# rare.  Both methods are run at one overlapping n to see that they agree.

# %%
from sparsemix.detectors import LRTDetector
from sparsemix.estimation import estimate_direct, estimate_importance
from sparsemix.models import Hypothesis, ModelParams, SparseR

# %%
params = ModelParams(0.6, SparseR(0.19))
for n in (10, 100, 1000):
    m = params.model(n)
    det = LRTDetector(m)
    fa = estimate_direct(det, m, Hypothesis.NULL, 5000, 1)
    md = estimate_direct(det, m, Hypothesis.ALTERNATIVE, 5000, 1)
    print(f"n={n:>5}  P_FA={fa.p_hat:.3f}±{fa.std_err:.3f}  P_MD={md.p_hat:.3f}±{md.std_err:.3f}")

# %% [markdown]
# Strong signal: errors shrink fast, so compare direct and weighted estimates.

# %%
params = ModelParams(0.6, SparseR(0.66))
m = params.model(1000)
det = LRTDetector(m)
for kind, hyp in (("fa", Hypothesis.NULL), ("md", Hypothesis.ALTERNATIVE)):
    d = estimate_direct(det, m, hyp, 20000, 2)
    w = estimate_importance(det, m, kind, 5000, 2)
    print(f"{kind}: direct {d.p_hat:.2e}±{d.std_err:.1e}  importance {w.p_hat:.2e}±{w.std_err:.1e}")
