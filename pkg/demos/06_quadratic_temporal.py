# The quadratic case study: GD on (1/2n) sum_i |w - e_i|^2 with sparsified gradients.
#
# With the provable step size the temporal run stays under the envelope
# (1 - eta)^t G. With a larger step the estimation error of temporal
# decoding collapses to round-off while Rand-k, Wangni and induced
# compression sit on an error floor.

import warnings

from corrmean import desk_config, run_task

metrics, envelope = run_task(desk_config("quadratic", decoder="temporal", seed=0))
print("eta = 0.05, temporal")
for t in (1, 10, 100, 250, 500):
    print(f"  round {t:3d}: |w - w*|^2 = {metrics[t - 1].task_loss:10.4e}   envelope {envelope[t - 1]:10.4e}")

# %% eta = 0.1, above the bound (a warning says so; silenced here)

print("\neta = 0.1, est_mse at round 500 / round 1")
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    for encoder, decoder in [("rand_k", "rand_k"), ("wangni", "prescaled"), ("induced", "prescaled"), ("rand_k", "temporal")]:
        m, _ = run_task(desk_config("quadratic", encoder=encoder, decoder=decoder, lr=0.1, seed=0))
        print(f"  {encoder + '/' + decoder:>18}: {m[-1].est_mse / m[0].est_mse:.3e}")
