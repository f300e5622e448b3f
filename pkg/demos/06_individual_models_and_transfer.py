"""Train each modality on its own, then try to transfer into the combined
model.

Individual models pair one encoder with a private linear probe; their test
accuracies show how informative each modality is by itself. The pretrained
encoder weights can then seed the combined model in two transfer regimes
(training only the post-average head, or fine-tuning everything), compared
against joint training from scratch.
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
    train_individual,
)
from baitradar.corpus import select_records
from baitradar.training import prepare_corpus

records = generate_synthetic(
    SyntheticConfig(n_records=400, clickbait_ratio=0.6,
                    signal_strengths=SignalStrengths.uniform(0.8), seed=41)
)
split = split_dataset(records, seed=41)
config = TrainConfig(seed=41, batch_size=32, max_epochs=40, loss_threshold=0.05, patience=15)
prepared = prepare_corpus(records, split, config)
test_records = select_records(records, split.test)

print("individual models (encoder + private probe):")
pretrained = []
for modality in MODALITIES:
    model, report = train_individual(modality, records, split, config, prepared=prepared)
    result = evaluate(model, test_records, subset=ModalityMask.from_names([modality]))
    pretrained.append(model)
    print(f"  {modality:<17} accuracy={result.accuracy:.3f}  ({report.epochs_run} epochs)")

print("\ncombined model:")
for regime, init in (("head_only", pretrained), ("finetune", pretrained), ("scratch", None)):
    cfg = dataclasses.replace(config, regime=regime)
    model, report = train(records, split, cfg, init=init, prepared=prepared)
    result = evaluate(model, test_records)
    print(f"  {regime:<10} accuracy={result.accuracy:.3f}  ({report.epochs_run} epochs, "
          f"stop={report.stop_reason})")
