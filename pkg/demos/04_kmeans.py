# Lloyd's algorithm where every node ships its local cluster means sparsified.
#
# The server weights node i's cluster-c mean by how many points it assigned
# there. Local means of the same cluster agree across nodes, and they change
# little between rounds, so spatial and temporal decoding both pay off.

from corrmean import desk_config, run_task

for decoder in ("rand_k", "spatial_avg", "temporal", "temporal_shared"):
    metrics, _ = run_task(desk_config("kmeans", decoder=decoder, seed=0))
    mse = sum(m.est_mse for m in metrics) / len(metrics)
    print(f"{decoder:>16}: mean est_mse {mse:7.4f}   final loss {metrics[-1].task_loss:.3f}")
