"""
The training-free clustering pipeline, one stage at a time
==========================================================

Runs the tacdt stages by hand on a single class so the intermediate
objects are visible: PCA reduction, the incremental CF-tree, the
weighted k-means pass over leaf entries, and the final representative
picks.
"""

import numpy as np

from coresel.birch import CFTree, global_cluster
from coresel.datagen import BenchmarkSpec, gen_benchmark
from coresel.linalg import derive_stream, pca_fit, pca_transform
from coresel.selection import SelectionConfig, distill

spec = BenchmarkSpec(
    num_classes=3, per_class=80, dim=32, modes_per_class=3,
    test_per_class=10, seed=7,
)
train, _ = gen_benchmark(spec)
Xc = train.X[train.class_indices(0)].astype(np.float64)
print(f"class 0 pool: {Xc.shape[0]} items in {Xc.shape[1]} dims")

# stage 1: reduce to a compact spectrum
model = pca_fit(Xc, 8)
Z = pca_transform(model, Xc)
kept = model.eigenvalues / model.eigenvalues.sum()
print(f"PCA to {Z.shape[1]} dims, leading shares {np.round(kept[:3], 3)}")

# stage 2: one-pass CF-tree; the threshold caps each leaf entry's radius,
# so it sets the granularity of the summary
d = np.linalg.norm(Z[:, None] - Z[None, :], axis=2)
median = np.median(d[d > 0])
for scale in (0.5, 0.25):
    tree = CFTree(threshold=scale * median, branching_factor=50)
    for i in range(Z.shape[0]):
        tree.insert(Z[i], i)
    entries = tree.leaf_entries()
    sizes = sorted((e.cf.n for e in entries), reverse=True)
    print(f"threshold {scale} x median: {len(entries)} leaf entries, "
          f"largest {sizes[:6]}")
tree.audit()  # raises if any sufficient statistic drifted

# stage 3: weighted k-means regroups the fine entries into vpc clusters,
# each entry weighted by how many items it absorbed
rng = derive_stream(7, 0)
clustering = global_cluster(entries, 5, rng)
for g in range(clustering.centroids.shape[0]):
    members = np.nonzero(clustering.assignments == g)[0]
    pooled = sum(entries[j].cf.n for j in members)
    print(f"  group {g}: {members.size} entries, {pooled} items")

# stage 4: the packaged method does all of the above per class
result = distill(train, SelectionConfig(method="tacdt", vpc=5, master_seed=7))
print(f"\ntacdt picks for class 0: {result.per_class[0].tolist()}")
print(f"objective values per class: {np.round(result.objectives, 4).tolist()}")
