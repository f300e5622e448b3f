"""Train the combined six-encoder model from scratch and evaluate it.

The full pipeline: build a vocabulary and statistics normalization from the
training split only, featurize, run mini-batch Adam over binary cross-entropy
with loss-threshold early stopping, then score the held-out test split and
round-trip the weights through a checkpoint file.
"""

import tempfile
from pathlib import Path

from baitradar import (
    SignalStrengths,
    SyntheticConfig,
    TrainConfig,
    evaluate,
    generate_synthetic,
    load_checkpoint,
    save_checkpoint,
    split_dataset,
    train,
)
from baitradar.corpus import select_records

records = generate_synthetic(
    SyntheticConfig(n_records=400, clickbait_ratio=0.6,
                    signal_strengths=SignalStrengths.uniform(0.8), seed=23)
)
split = split_dataset(records, seed=23)
print(f"split sizes (train/val/test): {split.sizes()}")

config = TrainConfig(seed=23, batch_size=32, max_epochs=40, loss_threshold=0.05, patience=15)
model, report = train(records, split, config)
print(f"trained for {report.epochs_run} epochs, stopped by {report.stop_reason} "
      f"in {report.wall_time_s:.0f}s")
print(f"loss curve: {[round(l, 3) for l in report.losses]}")
print(f"validation accuracy: {[round(v, 3) for v in report.val_accuracies]}")

test_records = select_records(records, split.test)
result = evaluate(model, test_records)
cm = result.cm
print(f"\ntest accuracy {result.accuracy:.3f} "
      f"(TP={cm.tp} TN={cm.tn} FP={cm.fp} FN={cm.fn})")
print(f"inference latency: mean {result.mean_latency_s * 1e3:.1f} ms, "
      f"max {result.max_latency_s * 1e3:.1f} ms per record")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "model.ckpt"
    save_checkpoint(model, path)
    print(f"\ncheckpoint is {path.stat().st_size / 1e6:.1f} MB")
    restored = load_checkpoint(path)
    pred_a = model.predict(test_records[0])
    pred_b = restored.predict(test_records[0])
    print(f"restored model reproduces the prediction exactly: {pred_a == pred_b}")
    print(f"sample prediction: {pred_b.to_json_obj()}")
