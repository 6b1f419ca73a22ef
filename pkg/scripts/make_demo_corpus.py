#!/usr/bin/env python3
"""Write a synthetic evaluation corpus (mixtures, references, F0 truth,
manifest) for exercising the evaluate and grid-search subcommands."""

import argparse
import logging

from vocsep.synth import write_demo_corpus


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("directory", help="output directory (created if missing)")
    parser.add_argument("--clips", type=int, default=3)
    parser.add_argument("--duration", type=float, default=6.0, help="seconds per clip")
    parser.add_argument("--sample-rate", type=int, default=16000)
    parser.add_argument("--snr", type=float, default=0.0, help="vocal/accomp SNR in dB")
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO, format="%(message)s")
    manifest = write_demo_corpus(
        args.directory,
        n_clips=args.clips,
        duration_seconds=args.duration,
        sample_rate=args.sample_rate,
        snr_db=args.snr,
    )
    print(manifest)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
