"""
Training on the toy benchmark
=============================

A short meta-training run on the five-primitive toy benchmark, followed by
a fixed-seed evaluation and a two-row ablation table. Pass ``--full`` for
the acceptance-size run (about ten minutes on one CPU core).
"""

import sys
import tempfile
from pathlib import Path

from pcia import ExperimentConfig
from pcia.harness import evaluate_model, experiment_data, format_table, table_rows, train
from pcia.model import load_checkpoint

full = "--full" in sys.argv
cfg = ExperimentConfig.load(Path(__file__).resolve().parents[1] / "configs" / "toy.cfg")
if not full:
    cfg = cfg.replace(train_epochs=1, train_episodes=40, val_episodes=10, test_episodes=20)

out = Path(tempfile.mkdtemp(prefix="pcia-toy-"))
data = experiment_data(cfg)
print(f"{len(data.train)} training / {len(data.val)} validation / {len(data.test)} test clouds")

###############################################################################
# Train with every module enabled, then without CIF+.

reports = []
for name, c in [("full", cfg), ("no-cif", cfg.replace(cif_enabled=False))]:
    result = train(c, data, out / name)
    model, _ = load_checkpoint(result.best_path, c)
    report = evaluate_model(model, data.test, c)
    print(name, report)
    reports.append(report)

###############################################################################
# The ablation table, keyed by module toggles.

print(format_table(table_rows(reports)))
