"""Full classifier: per-modality encoders, masked average fusion, and the
classification head, together with the frozen preprocessing state (vocabulary
and statistics normalization) needed to turn raw records into inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import encoders, fusion, nncore, textpipe
from .corpus import LABEL_CLICKBAIT, VideoRecord, load_ppm
from .encoders import EncoderConfig, StatsNormalizer
from .modalities import MODALITIES, TEXT_MODALITIES, ModalityMask
from .textpipe import Vocabulary


class ModelError(ValueError):
    """Prediction requested beyond the model's capabilities."""


@dataclass
class Features:
    """One record's encoder-ready payloads."""

    id: str
    label: float | None
    present: ModalityMask
    text_ids: dict[str, np.ndarray]
    text_len: dict[str, int]
    thumbnail: np.ndarray | None  # uint8 [3,S,S]
    stats: np.ndarray | None      # z-scored float64 [5]


def featurize_record(record: VideoRecord, vocab: Vocabulary, stats_norm: StatsNormalizer,
                     config: EncoderConfig, base_dir=None, modalities=MODALITIES) -> Features:
    """Tokenize/encode text, decode+resize the thumbnail, and z-score the
    statistics for every requested modality the record actually has."""
    usable = record.present_mask().intersect(ModalityMask.from_names(modalities))
    text_ids, text_len = {}, {}
    for m in TEXT_MODALITIES:
        if getattr(usable, m):
            seq = textpipe.encode_modality(record, m, vocab)
            text_ids[m] = np.asarray(seq.ids, dtype=np.int64)
            text_len[m] = seq.true_length
    thumb = None
    if usable.thumbnail:
        img = record.thumbnail_image
        if img is None:
            path = Path(record.thumbnail_path)
            if not path.is_absolute() and base_dir is not None:
                path = Path(base_dir) / path
            img = load_ppm(path)
        thumb = encoders.prepare_thumbnail(img, config.thumb_size)
    stats = stats_norm.transform(record.stats) if usable.statistics else None
    label = None
    if record.label is not None:
        label = 1.0 if record.label == LABEL_CLICKBAIT else 0.0
    return Features(
        id=record.id, label=label, present=usable,
        text_ids=text_ids, text_len=text_len, thumbnail=thumb, stats=stats,
    )


class BaitRadarModel:
    """Parameters plus frozen preprocessing for a chosen modality subset.

    ``head_arch`` is "mlp" for the combined model (dense d->hidden -> relu ->
    dense hidden->1 -> sigmoid) and "linear" for an individual model's private
    probe (dense d->1 -> sigmoid).
    """

    def __init__(self, config: EncoderConfig, vocab: Vocabulary, stats_norm: StatsNormalizer,
                 modalities, head_arch: str, params: dict[str, nncore.Parameter],
                 init_seed: int = 0):
        self.config = config
        self.vocab = vocab
        self.stats_norm = stats_norm
        self.modalities = tuple(m for m in MODALITIES if m in set(modalities))
        self.head_arch = head_arch
        self.params = params
        self.init_seed = init_seed
        # effective training configuration, echoed into checkpoints
        self.config_echo: dict | None = None

    @property
    def head_prefix(self) -> str:
        return "head" if self.head_arch == "mlp" else f"{self.modalities[0]}.head"

    @classmethod
    def build(cls, modalities, vocab: Vocabulary, stats_norm: StatsNormalizer,
              config: EncoderConfig = EncoderConfig(), seed: int = 0,
              head_arch: str = "mlp") -> "BaitRadarModel":
        """Seeded initialization; encoders in canonical modality order, then
        the head, so the same seed always yields the same weights."""
        modalities = tuple(m for m in MODALITIES if m in set(modalities))
        if not modalities:
            raise ModelError("a model needs at least one modality")
        if head_arch == "linear" and len(modalities) != 1:
            raise ModelError("the linear probe head is for single-modality models")
        rng = np.random.default_rng(seed)
        values: dict[str, np.ndarray] = {}
        for m in modalities:
            values.update(encoders.init_encoder_params(m, len(vocab), config, rng))
        prefix = "head" if head_arch == "mlp" else f"{modalities[0]}.head"
        values.update(
            fusion.init_head_params(config.fusion_dim, config.head_hidden, head_arch, rng, prefix)
        )
        params = {name: nncore.Parameter(name, values[name]) for name in sorted(values)}
        return cls(config, vocab, stats_norm, modalities, head_arch, params, init_seed=seed)

    # -- parameter plumbing -------------------------------------------------

    def parameters(self, trainable_only_head: bool = False) -> list[nncore.Parameter]:
        names = sorted(self.params)
        if trainable_only_head:
            prefix = self.head_prefix + "."
            names = [n for n in names if n.startswith(prefix)]
        return [self.params[n] for n in names]

    def zero_grads(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def copy_param_values(self) -> dict[str, np.ndarray]:
        return {n: p.value.copy() for n, p in self.params.items()}

    def load_param_values(self, values: dict[str, np.ndarray]) -> None:
        for n, v in values.items():
            if n in self.params:
                if self.params[n].value.shape != v.shape:
                    raise ModelError(
                        f"parameter {n} has shape {v.shape}, expected {self.params[n].value.shape}"
                    )
                self.params[n].value = v.copy()

    # -- featurization ------------------------------------------------------

    def featurize(self, record: VideoRecord, base_dir=None) -> Features:
        return featurize_record(
            record, self.vocab, self.stats_norm, self.config,
            base_dir=base_dir, modalities=self.modalities,
        )

    # -- batched forward/backward --------------------------------------------

    def forward_features(self, feats: list[Features], masks: list[ModalityMask]):
        """Probabilities for a batch. ``masks`` gives the effective modality
        mask per row (already intersected with availability)."""
        n_rows = len(feats)
        d = self.config.fusion_dim
        outputs: dict[str, np.ndarray] = {}
        present: dict[str, np.ndarray] = {}
        enc_caches: dict[str, tuple] = {}
        for m in self.modalities:
            keep = np.array([getattr(mask, m) for mask in masks], dtype=bool)
            present[m] = keep
            rows = np.flatnonzero(keep)
            out = np.zeros((n_rows, d))
            cache = None
            if rows.size:
                if m in TEXT_MODALITIES:
                    ids = np.stack([feats[i].text_ids[m] for i in rows])
                    lens = np.array([feats[i].text_len[m] for i in rows], dtype=np.int64)
                    sub, cache = encoders.encode_text_forward(m, ids, lens, self.params)
                elif m == "thumbnail":
                    px = np.stack([feats[i].thumbnail for i in rows]).astype(np.float64) / 255.0
                    sub, cache = encoders.encode_thumbnail_forward(px, self.params, self.config)
                else:
                    z = np.stack([feats[i].stats for i in rows])
                    sub, cache = encoders.encode_stats_forward(z, self.params)
                out[rows] = sub
            outputs[m] = out
            enc_caches[m] = (rows, cache)
        fused, n_present = fusion.fuse_batch(outputs, present)
        probs, head_cache = fusion.head_forward(fused, self.params, self.head_arch, self.head_prefix)
        return probs, (enc_caches, present, n_present, head_cache)

    def backward(self, d_probs, cache) -> None:
        enc_caches, present, n_present, head_cache = cache
        d_fused = fusion.head_backward(d_probs, head_cache, self.params)
        d_per = fusion.fuse_batch_backward(d_fused, present, n_present)
        for m in self.modalities:
            rows, enc_cache = enc_caches[m]
            if not rows.size:
                continue
            d_sub = d_per[m][rows]
            if m in TEXT_MODALITIES:
                encoders.encode_text_backward(d_sub, enc_cache, self.params)
            elif m == "thumbnail":
                encoders.encode_thumbnail_backward(d_sub, enc_cache, self.params)
            else:
                encoders.encode_stats_backward(d_sub, enc_cache, self.params)

    # -- inference ------------------------------------------------------------

    def effective_mask(self, record: VideoRecord, subset: ModalityMask | None) -> ModalityMask:
        capability = ModalityMask.from_names(self.modalities)
        if subset is None:
            subset = capability
        else:
            missing = [m for m in subset.names() if m not in self.modalities]
            if missing:
                raise ModelError(
                    f"model has no encoders for requested modalities: {', '.join(missing)}"
                )
        effective = subset.intersect(record.present_mask())
        if effective.count() == 0:
            raise ModelError(f"record {record.id!r}: no usable modalities under the requested mask")
        return effective

    def predict(self, record: VideoRecord, subset: ModalityMask | None = None,
                base_dir=None) -> fusion.Prediction:
        """Classify one record using only the requested-and-available
        modalities; the mask actually used is recorded on the output."""
        effective = self.effective_mask(record, subset)
        feats = featurize_record(
            record, self.vocab, self.stats_norm, self.config,
            base_dir=base_dir, modalities=effective.names(),
        )
        probs, _ = self.forward_features([feats], [effective])
        prob = float(probs[0])
        return fusion.Prediction(
            id=record.id, probability=prob, label=fusion.decide_label(prob), mask_used=effective,
        )
