"""Measure how much each modality adds on top of the title.

Every requested combination contains the title model; each is trained from
scratch under the same budget and scored on the same test split, and the full
six-modality set is always included for reference. The ranked table mirrors
what the ``baitradar sweep`` subcommand writes as CSV/JSON.
"""

from baitradar import (
    SignalStrengths,
    SyntheticConfig,
    TrainConfig,
    generate_synthetic,
    split_dataset,
    sweep_combinations,
)

records = generate_synthetic(
    SyntheticConfig(n_records=400, clickbait_ratio=0.6,
                    signal_strengths=SignalStrengths.uniform(0.7), seed=37)
)
split = split_dataset(records, seed=37)
config = TrainConfig(seed=37, batch_size=32, max_epochs=40, loss_threshold=0.05, patience=15)

result = sweep_combinations(
    records, split, config,
    combinations=[
        ("title",),
        ("title", "tags"),
        ("title", "audio_transcript"),
        ("title", "comments", "tags"),
        # the six-modality set is added automatically
    ],
)

print("combination                                                accuracy  epochs")
for row in result.rows:
    print(f"{row.label:<58} {row.accuracy:.3f}     {row.epochs}")

print("\nCSV twin:\n" + result.to_csv())
