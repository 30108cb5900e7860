"""Write synthetic domains to CSV, read them back and adapt.

The same files can be fed to the command line tool through a config such as

    [data]
    source = "src.csv"
    source_label_column = -1
    target = "tgt.csv"

and ``mtuda run config.toml --out run_out``.
"""
import tempfile
from pathlib import Path

from mtuda import PipelineConfig, SyntheticSpec, generate_synthetic, run
from mtuda.data import load_csv, save_csv

source, target = generate_synthetic(SyntheticSpec(per_class_count=60, rng_seed=5))
with tempfile.TemporaryDirectory() as tmp:
    src, tgt = Path(tmp, "src.csv"), Path(tmp, "tgt.csv")
    save_csv(src, source)
    save_csv(tgt, target)
    s, t = load_csv(src, label_column=-1), load_csv(tgt, label_column=-1)

res = run(s, t.unlabeled(), PipelineConfig(), t.labels)
print("target accuracy", res.final_accuracy, "after", len(res.label_changes), "iterations")
