#!/usr/bin/env python3
"""Rebuilds a stoplist from plain-text corpus files.

Counts word n-grams (n = 1..3) after lowercasing and keeps the most frequent.

    python3 scripts/build_stoplist.py corpus/*.txt --size 500 \
        --out crates/core/data/stoplist.txt
"""

import argparse
import re
import sys
from collections import Counter
from pathlib import Path

WORD = re.compile(r"[a-z]+(?:'[a-z]+)?")


def ngrams(tokens, max_n):
    for n in range(1, max_n + 1):
        for i in range(len(tokens) - n + 1):
            yield " ".join(tokens[i : i + n])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("corpus", nargs="+", type=Path)
    ap.add_argument("--size", type=int, default=500)
    ap.add_argument("--max-n", type=int, default=3)
    ap.add_argument("--min-count", type=int, default=2)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    counts = Counter()
    for path in args.corpus:
        with path.open(encoding="utf-8", errors="replace") as f:
            for line in f:
                counts.update(ngrams(WORD.findall(line.lower()), args.max_n))

    ranked = sorted(
        (g for g, c in counts.items() if c >= args.min_count),
        key=lambda g: (-counts[g], g),
    )[: args.size]
    text = "\n".join(ranked) + "\n"
    if args.out:
        args.out.write_text(text, encoding="utf-8")
        print(f"wrote {len(ranked)} entries to {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
