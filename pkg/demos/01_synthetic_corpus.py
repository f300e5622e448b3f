"""Generate a labeled synthetic video corpus and look inside it.

Every record carries six modality payloads: title, thumbnail (a 64x64 binary
PPM), comments, audio transcript, tags, and view statistics. Clickbait
records get planted signatures (provocative title tokens, a saturated
thumbnail block, skeptical comments, a transcript that never echoes the
title, inflated tag counts, heavy-tailed statistics); signal strengths dial
each signature from absent (0) to always-on (1). Generation is a pure
function of the config: the same seed always yields the same bytes on disk.
"""

import tempfile
from pathlib import Path

import numpy as np

from baitradar import (
    SignalStrengths,
    SyntheticConfig,
    generate_synthetic,
    load_jsonl,
    split_dataset,
    write_corpus,
)

config = SyntheticConfig(
    n_records=200,
    clickbait_ratio=0.6,
    signal_strengths=SignalStrengths.uniform(0.8),
    seed=42,
)
records = generate_synthetic(config)
n_cb = sum(1 for r in records if r.label == "clickbait")
print(f"generated {len(records)} records, {n_cb} labeled clickbait")

cb = next(r for r in records if r.label == "clickbait")
ncb = next(r for r in records if r.label == "non_clickbait")
print(f"\na clickbait title:     {cb.title!r}")
print(f"a non-clickbait title: {ncb.title!r}")
print(f"tag counts: clickbait={len(cb.tags)}, non-clickbait={len(ncb.tags)}")
print(f"clickbait stats: {cb.stats}")

# the transcript signature: non-clickbait content echoes its own title words
title_words = set(ncb.title.lower().split())
echoed = title_words & set(ncb.transcript.split())
print(f"non-clickbait transcript echoes {len(echoed)} of {len(title_words)} title words")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "corpus.jsonl"
    write_corpus(records, path)
    n_thumbs = len(list((Path(tmp) / "thumbs").glob("*.ppm")))
    print(f"\nwrote {path.name} plus {n_thumbs} PPM thumbnails")
    reloaded = load_jsonl(path)
    print(f"round trip preserves every record: {reloaded == records}")

split = split_dataset(records, seed=42)
print(f"\n81/9/10 split sizes: {split.sizes()}")
disjoint = split_dataset(records, seed=42, channel_disjoint=True)
train_channels = {r.channel_id for r in records if r.id in set(disjoint.train)}
test_channels = {r.channel_id for r in records if r.id in set(disjoint.test)}
print(f"channel-disjoint split shares no channels across partitions: "
      f"{not (train_channels & test_channels)}")

tag_cb = np.mean([len(r.tags) for r in records if r.label == "clickbait"])
tag_ncb = np.mean([len(r.tags) for r in records if r.label == "non_clickbait"])
print(f"\nmean tags per video: clickbait={tag_cb:.1f} vs non-clickbait={tag_ncb:.1f}")
