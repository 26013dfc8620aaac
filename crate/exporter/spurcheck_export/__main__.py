"""Command line: ``python -m spurcheck_export CONTEXTS --model ID --out FILE``."""

from __future__ import annotations

import argparse
import logging
import sys

from .cev import FormatError
from .encoder import BertEncoder
from .export import export, manifest_path_for


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(prog="spurcheck-export", description="Encode spurcheck context windows with a BERT-style encoder.")
    p.add_argument("contexts", help="contexts.jsonl written by `spurcheck extract`")
    p.add_argument("--model", required=True, help="Hugging Face model id or local directory")
    p.add_argument("--revision", help="model revision (commit, tag or branch)")
    p.add_argument("--out", required=True, help="CEV1 file to write")
    p.add_argument("--manifest", help="export manifest to write (default: <out>.json)")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--device", default="cpu")
    args = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    try:
        encoder = BertEncoder.from_pretrained(args.model, revision=args.revision, device=args.device)
        manifest_out = args.manifest or manifest_path_for(args.out)
        m = export(args.contexts, encoder, args.out, batch_size=args.batch_size, manifest_out=manifest_out)
    except (FormatError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (RuntimeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    logging.info("wrote %s (%d vectors of dim %d) and %s", args.out, m.count, m.dim, manifest_out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
