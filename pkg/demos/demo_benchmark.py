"""The experiment harness end to end: bootstrap splits, gold caching,
confidence intervals, and report files."""
import os
import tempfile

import numpy as np

from simsearch.bench.cli import build_parser, config_from_args
from simsearch.bench.runner import run_experiment
from simsearch.bench.reports import format_report_block

workdir = tempfile.mkdtemp(prefix="simsearch_demo_")
data_file = os.path.join(workdir, "sample.txt")
rng = np.random.default_rng(4)
with open(data_file, "w") as fh:
    for _ in range(4000):
        label = int(rng.integers(0, 4))
        row = " ".join(repr(float(v)) for v in rng.uniform(size=8))
        fh.write(f"label:{label} {row}\n")

argv = [
    "--distType", "float", "--spaceType", "l2",
    "--testSetQty", "3", "--maxNumQuery", "100",
    "--knn", "10",
    "--dataFile", data_file,
    "--method", "hnsw",
    "--createIndex", "M=8,efConstruction=100",
    "--queryTimeParams", "efSearch=20",
    "--queryTimeParams", "efSearch=100",
    "--queryTimeParams", "efSearch=400",
    "--cachePrefixGS", os.path.join(workdir, "gold"),
    "--outFilePrefix", os.path.join(workdir, "result"),
]
print("running:", " ".join(argv), "\n")
rows = run_experiment(config_from_args(build_parser().parse_args(argv)))

for row in rows["K=10"]:
    print(format_report_block(row))

dat = os.path.join(workdir, "result_K=10.dat")
print(f"tab-separated data ({dat}):")
print(open(dat).read())
print(f"gold standard cached under {workdir}/gold.* and reused on reruns")
