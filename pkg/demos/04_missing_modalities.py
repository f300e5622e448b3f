"""Classify videos even when some inputs are missing.

The fused vector is the average of the encoder outputs that are actually
present, divided by how many there are, so knocking out a modality leaves the
vector's scale intact and the same head keeps working. Training with modality
dropout (each present input kept with probability 0.9) teaches the head to
expect partial averages; afterwards any single input can disappear at
inference with only a small accuracy cost.
"""

import dataclasses

from baitradar import (
    MODALITIES,
    ModalityMask,
    SignalStrengths,
    SyntheticConfig,
    TrainConfig,
    evaluate,
    generate_synthetic,
    split_dataset,
    train,
)
from baitradar.corpus import select_records

records = generate_synthetic(
    SyntheticConfig(n_records=400, clickbait_ratio=0.6,
                    signal_strengths=SignalStrengths.uniform(0.8), seed=29)
)
split = split_dataset(records, seed=29)
config = TrainConfig(seed=29, batch_size=32, max_epochs=40, loss_threshold=0.05,
                     patience=15, modality_keep_prob=0.9)
model, report = train(records, split, config)
print(f"trained with modality dropout for {report.epochs_run} epochs\n")

test_records = select_records(records, split.test)
print("evaluation mask                         accuracy")
full = evaluate(model, test_records)
print(f"all six modalities{'':<22}{full.accuracy:.3f}")
for dropped in MODALITIES:
    mask = ModalityMask.all().drop(dropped)
    result = evaluate(model, test_records, subset=mask)
    print(f"without {dropped:<32}{result.accuracy:.3f}")

# records can also arrive with fields already missing, e.g. comments disabled
crippled = dataclasses.replace(test_records[0], comments=None, thumbnail_path=None,
                               thumbnail_image=None)
pred = model.predict(crippled)
print(f"\nrecord with comments and thumbnail absent -> "
      f"uses {list(pred.mask_used.names())}, p(clickbait)={pred.probability:.3f}")
