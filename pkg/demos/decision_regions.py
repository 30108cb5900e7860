"""Print coarse ASCII maps of the source and target decision regions.

Useful for seeing that the target head bends towards the shifted blobs
while the source head stays put.
"""
from mtuda import KernelSpec, PipelineConfig, SyntheticSpec, generate_synthetic, run
from mtuda.pipeline import decision_grid

source, target = generate_synthetic(SyntheticSpec(rng_seed=0))
res = run(source, target.unlabeled(), PipelineConfig(kernel=KernelSpec("linear")), target.labels)

bounds = ((-3.0, 4.0), (-3.0, 4.0))
for head in ("source", "target"):
    xs, ys, cls = decision_grid(res.model, bounds, resolution=28, which=head)
    print(f"{head} head (x to the right, y upwards)")
    for row in cls[::-1]:
        print("".join(".#"[c] for c in row))
    print()
