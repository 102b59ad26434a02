# Closed forms versus brute force on a toy instance.
#
# With three nodes in four dimensions sending two coordinates each there are
# only 6^3 = 216 sampling patterns, so we can average over all of them.

import numpy as np

from corrmean import (
    Decoder,
    ServerMemory,
    TFunction,
    correlation_summary,
    enumerate_exact,
    mse_rand_k,
    mse_spatial,
    mse_temporal,
    optimal_t,
)

rng = np.random.default_rng(1)
X = rng.standard_normal((3, 4)) + 1.0  # shared offset: positively correlated
k = 2
rho = correlation_summary(X).rho
print(f"R2/R1 = {rho:.4f}")

# %% Every estimator: formula next to the enumerated value

memory = ServerMemory("per_node", X + 0.1 * rng.standard_normal(X.shape))
rows = [("rand_k", Decoder("rand_k"), mse_rand_k(X, k))]
for t in (TFunction("spatial_max", 3), TFunction("spatial_avg", 3), optimal_t(rho, 3)):
    rows.append((t.kind, Decoder("spatial", t=t), mse_spatial(X, k, t)))
rows.append(("temporal", Decoder("temporal", memory=memory), mse_temporal(X, memory, k)))

for name, dec, formula in rows:
    exact = enumerate_exact(X, k, dec)
    print(f"{name:>12}: formula {formula:.12f}  enumerated {exact.mse:.12f}  "
          f"max|bias| {np.abs(exact.bias).max():.1e}")

# Temporal with memory close to the truth is far better than anything that
# only looks at the current round.
