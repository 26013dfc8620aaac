"""Context encoders.

An encoder turns token sequences into fixed-size vectors. The BERT encoder
mean-pools each of the last four hidden layers over the window's subword
tokens and concatenates the four pooled vectors, deepest layer last.
"""

from __future__ import annotations

from typing import Optional, Protocol, Sequence

import numpy as np

POOLING = "mean over subwords per layer; last 4 layers concatenated, deepest last"
LAYERS = 4


class Encoder(Protocol):
    name: str
    revision: Optional[str]
    hidden_size: int

    @property
    def dim(self) -> int: ...

    def encode(self, windows: Sequence[Sequence[str]]) -> np.ndarray:
        """``(len(windows), dim)`` float32 array."""
        ...


class BertEncoder:
    """A Hugging Face encoder with a fast tokenizer."""

    def __init__(self, model, tokenizer, name: str, revision: Optional[str] = None, device: str = "cpu"):
        if not getattr(tokenizer, "is_fast", False):
            raise ValueError("a fast tokenizer is needed to align subwords with words")
        if model.config.num_hidden_layers < LAYERS:
            raise ValueError(f"the encoder has {model.config.num_hidden_layers} layers, {LAYERS} are needed")
        self.model = model.to(device).eval()
        self.tokenizer = tokenizer
        self.device = device
        self.name = name
        self.revision = revision
        self.hidden_size = int(model.config.hidden_size)

    @classmethod
    def from_pretrained(cls, model_id: str, revision: Optional[str] = None, device: str = "cpu") -> "BertEncoder":
        from transformers import AutoModel, AutoTokenizer

        try:
            tokenizer = AutoTokenizer.from_pretrained(model_id, revision=revision, use_fast=True)
            model = AutoModel.from_pretrained(model_id, revision=revision)
        except OSError as e:
            raise RuntimeError(f"cannot load encoder {model_id!r}: {e}") from e
        resolved = revision or getattr(model.config, "_commit_hash", None)
        return cls(model, tokenizer, name=model_id, revision=resolved, device=device)

    @property
    def dim(self) -> int:
        return LAYERS * self.hidden_size

    def encode(self, windows: Sequence[Sequence[str]]) -> np.ndarray:
        import torch

        out = np.zeros((len(windows), self.dim), dtype=np.float32)
        nonempty = [i for i, w in enumerate(windows) if len(w) > 0]
        if not nonempty:
            return out
        batch = self.tokenizer(
            [list(windows[i]) for i in nonempty],
            is_split_into_words=True,
            padding=True,
            truncation=True,
            return_tensors="pt",
        )
        # subwords that belong to some input word; special tokens and padding have no word id
        mask = torch.zeros(batch["input_ids"].shape, dtype=torch.float64)
        for row in range(len(nonempty)):
            for col, word in enumerate(batch.word_ids(row)):
                if word is not None:
                    mask[row, col] = 1.0
        with torch.no_grad():
            hidden = self.model(**{k: v.to(self.device) for k, v in batch.items()}, output_hidden_states=True).hidden_states
        counts = mask.sum(dim=1, keepdim=True).clamp(min=1.0)
        pooled = [(h.to("cpu", torch.float64) * mask.unsqueeze(-1)).sum(dim=1) / counts for h in hidden[-LAYERS:]]
        out[nonempty] = torch.cat(pooled, dim=1).numpy().astype(np.float32)
        return out
