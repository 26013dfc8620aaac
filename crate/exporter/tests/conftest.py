import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from spurcheck_export.cev import Context  # noqa: E402

SPECIAL = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]


def tiny_bert(words, hidden=8, seed=0):
    """A randomly initialised four-layer BERT with a word-level vocabulary."""
    torch = pytest.importorskip("torch")
    transformers = pytest.importorskip("transformers")
    # a few words are split into subwords so pooling over pieces is exercised
    pieces = sorted({w for w in words if len(w) <= 3} | {w[:3] for w in words} | {"##" + w[3:] for w in words if len(w) > 3})
    tokenizer = transformers.BertTokenizerFast(vocab={w: i for i, w in enumerate(SPECIAL + pieces)}, do_lower_case=True)
    config = transformers.BertConfig(
        vocab_size=len(SPECIAL) + len(pieces),
        hidden_size=hidden,
        num_hidden_layers=4,
        num_attention_heads=2,
        intermediate_size=2 * hidden,
        max_position_embeddings=64,
    )
    torch.manual_seed(seed)
    model = transformers.BertModel(config)
    from spurcheck_export.encoder import BertEncoder

    return BertEncoder(model, tokenizer, name="tiny-bert", revision="test")


def write_contexts(path, contexts, header=True):
    import json

    lines = []
    if header:
        lines.append(json.dumps({"artifact": "contexts", "config": "0123456789abcdef", "seed": 1}))
    for c in contexts:
        lines.append(
            json.dumps(
                {
                    "context_id": c.context_id,
                    "sentence_id": c.sentence_id,
                    "word": c.word,
                    "position": c.position,
                    "left": list(c.left),
                    "right": list(c.right),
                }
            )
        )
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def contexts():
    return [
        Context(0, 0, "refreshing", 1, ("it's",), ("to", "see", "a", "movie", "that")),
        Context(1, 1, "rare", 1, ("it's",), ("to", "see", "a", "movie", "that")),
        Context(2, 2, "boring", 3, ("the", "plot", "was"), ("and", "slow")),
        Context(3, 3, "spielberg", 0, (), ("directed", "this", "film")),
        Context(4, 4, "awful", 0, (), ()),
        Context(5, 5, "great", 2, ("a", "really"), ("cast",)),
    ]
