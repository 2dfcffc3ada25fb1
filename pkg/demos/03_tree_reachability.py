"""How often does each true band form one connected piece of the spanning tree?

The fused penalty can only cut tree edges, so a band split across several
tree components can never be recovered as a single cluster. This demo
counts how often a fresh draw has that property as the sample grows.
Run with ``python3 demos/03_tree_reachability.py``; takes a few minutes.
"""
import numpy as np

from scvcm.simulation import ScenarioConfig, is_mst_equal, make_dataset

for n in (60, 300, 1000):
    draws = [make_dataset(ScenarioConfig(n=n, seed=s))[1] for s in range(40)]
    rate = np.mean([is_mst_equal(t) for t in draws])
    pieces = np.mean([t.spaneigh[0].cluster_count for t in draws])
    print(f"n={n:4d}: {rate:5.1%} of draws reachable, "
          f"{pieces:.1f} tree components on average (4 bands)")
