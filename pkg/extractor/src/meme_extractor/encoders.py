"""Encoder registry: frozen pretrained text/vision models plus an offline fallback.

The transformer-backed encoders load lazily so the CLI works without torch
installed; ``hashed_text`` is fully offline and deterministic, intended for
fixtures and smoke tests.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np

_TOKEN = re.compile(r"\w+", re.UNICODE)

TEXT_MODEL_IDS = {
    "bert_base": "bert-base-uncased",
    "bertweet": "vinai/bertweet-base",
}
CLIP_MODEL_ID = "openai/clip-vit-base-patch32"


class EncoderError(RuntimeError):
    pass


@dataclass
class HashedTextEncoder:
    """Signed token hashing into a fixed-width bag; L2-normalized, no downloads."""

    dim: int = 64
    name: str = "hashed_text"
    needs_images: bool = False

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            for token in _TOKEN.findall(text.lower()):
                digest = hashlib.sha256(token.encode("utf-8")).digest()
                idx = int.from_bytes(digest[:4], "little") % self.dim
                sign = 1.0 if digest[4] % 2 == 0 else -1.0
                out[row, idx] += sign
            norm = np.linalg.norm(out[row])
            if norm > 0:
                out[row] /= norm
        return out.astype(np.float32)


class TransformerTextEncoder:
    """Mean-pooled final hidden states of a frozen text model."""

    needs_images = False

    def __init__(self, name: str, batch_size: int = 16, deterministic: bool = True):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise EncoderError(f"encoder {name!r} needs torch+transformers: {exc}") from exc
        self.name = name
        self._torch = torch
        if deterministic:
            torch.set_num_threads(1)
        model_id = TEXT_MODEL_IDS[name]
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_id)
            self.model = AutoModel.from_pretrained(model_id)
        except Exception as exc:
            raise EncoderError(f"cannot load {model_id!r} (offline?): {exc}") from exc
        self.model.eval()
        self.dim = int(self.model.config.hidden_size)
        self.batch_size = batch_size

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        torch = self._torch
        chunks = []
        with torch.no_grad():
            for start in range(0, len(texts), self.batch_size):
                batch = texts[start : start + self.batch_size]
                enc = self.tokenizer(batch, padding=True, truncation=True, return_tensors="pt")
                hidden = self.model(**enc).last_hidden_state
                mask = enc["attention_mask"].unsqueeze(-1).to(hidden.dtype)
                pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1)
                chunks.append(pooled.cpu().numpy().astype(np.float32))
        return np.vstack(chunks)


class ClipImageEncoder:
    """CLIP image-tower features over the full meme canvas (overlaid text included)."""

    needs_images = True
    name = "clip_image"

    def __init__(self, batch_size: int = 8, deterministic: bool = True):
        try:
            import torch
            from PIL import Image
            from transformers import CLIPImageProcessor, CLIPModel
        except ImportError as exc:
            raise EncoderError(f"clip_image needs torch+transformers+pillow: {exc}") from exc
        self._torch = torch
        self._image = Image
        if deterministic:
            torch.set_num_threads(1)
        try:
            self.processor = CLIPImageProcessor.from_pretrained(CLIP_MODEL_ID)
            self.model = CLIPModel.from_pretrained(CLIP_MODEL_ID)
        except Exception as exc:
            raise EncoderError(f"cannot load {CLIP_MODEL_ID!r} (offline?): {exc}") from exc
        self.model.eval()
        self.dim = int(self.model.config.projection_dim)
        self.batch_size = batch_size

    def encode_images(self, paths: list[str]) -> np.ndarray:
        torch = self._torch
        chunks = []
        with torch.no_grad():
            for start in range(0, len(paths), self.batch_size):
                batch = [self._image.open(p).convert("RGB") for p in paths[start : start + self.batch_size]]
                inputs = self.processor(images=batch, return_tensors="pt")
                feats = self.model.get_image_features(**inputs)
                chunks.append(feats.cpu().numpy().astype(np.float32))
        return np.vstack(chunks)


ENCODER_NAMES = ("bert_base", "bertweet", "clip_image", "hashed_text")


def make_encoder(name: str, batch_size: int = 16, deterministic: bool = True, dim: int = 64):
    if name == "hashed_text":
        return HashedTextEncoder(dim=dim)
    if name in TEXT_MODEL_IDS:
        return TransformerTextEncoder(name, batch_size=batch_size, deterministic=deterministic)
    if name == "clip_image":
        return ClipImageEncoder(batch_size=batch_size, deterministic=deterministic)
    raise EncoderError(f"unknown encoder {name!r}; choose from {ENCODER_NAMES}")
