"""CLI: extract --manifest M --encoder E --out F.memf [--batch-size N]"""

from __future__ import annotations

import argparse
import sys

from .encoders import ENCODER_NAMES, EncoderError
from .jobs import ExtractorJob, run_job, write_log


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="extract",
        description="Run a frozen pretrained encoder over a meme manifest and write MEMF features",
    )
    parser.add_argument("--manifest", required=True, help="JSON-lines manifest")
    parser.add_argument("--encoder", required=True, choices=ENCODER_NAMES)
    parser.add_argument("--out", required=True, help="output .memf path")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--log", default=None, help="also write the job log as JSON")
    parser.add_argument("--hashed-dim", type=int, default=64, help="dim of the hashed_text encoder")
    parser.add_argument(
        "--non-deterministic", action="store_true",
        help="allow multi-threaded encoding (faster, byte-stability not guaranteed)",
    )
    args = parser.parse_args(argv)

    job = ExtractorJob(
        manifest_path=args.manifest,
        output_path=args.out,
        encoder=args.encoder,
        batch_size=args.batch_size,
        deterministic=not args.non_deterministic,
        hashed_dim=args.hashed_dim,
    )
    try:
        log = run_job(job)
    except (EncoderError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for warning in log.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if args.log:
        write_log(log, args.log)
    if not log.ok:
        for failure in log.failures:
            print(f"failure: {failure}", file=sys.stderr)
        return 1
    print(f"wrote {log.count} x {log.dim} features ({log.encoder}) to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
