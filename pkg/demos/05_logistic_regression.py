# Softmax regression on label-sharded (non-IID) data.
#
# Each node sees only two shards of a label-sorted dataset, so node gradients
# disagree with each other; across rounds, though, each node's gradient moves
# slowly. Temporal decoding fills unsent coordinates from the node's last
# transmission and wins.

from corrmean import desk_config, run_task

for decoder in ("rand_k", "spatial_avg", "temporal"):
    metrics, _ = run_task(desk_config("logreg", decoder=decoder, seed=0))
    first = sum(m.est_mse for m in metrics[:10]) / 10
    last = sum(m.est_mse for m in metrics[-10:]) / 10
    print(f"{decoder:>12}: est_mse first 10 rounds {first:.4f}, last 10 rounds {last:.4f},"
          f" train loss {metrics[-1].task_loss:.3f}")
