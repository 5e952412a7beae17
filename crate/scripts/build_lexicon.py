#!/usr/bin/env python3
"""Regenerate crates/core/data/lexicon.tsv from an upstream cmudict.dict.

One pronunciation per word: the first listed variant, unless the word appears
in OVERRIDES, which selects the strong (citation) form for a handful of words
whose first variant is a reduced form. Stress digits are stripped.

Usage: build_lexicon.py path/to/cmudict.dict > crates/core/data/lexicon.tsv
"""

import re
import sys

# word -> 1-based variant index in cmudict.dict
OVERRIDES = {
    "and": 2,
    "roxanne": 2,
}

VARIANT = re.compile(r"^(.+)\((\d+)\)$")


def main(path):
    variants = {}
    order = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            head, *phones = line.split()
            m = VARIANT.match(head)
            word, idx = (m.group(1), int(m.group(2))) if m else (head, 1)
            if word not in variants:
                variants[word] = {}
                order.append(word)
            variants[word][idx] = [re.sub(r"\d", "", p) for p in phones]

    out = sys.stdout
    out.write("# Derived from the CMU Pronouncing Dictionary (cmudict 0.7b).\n")
    out.write("# Copyright (C) 1993-2015 Carnegie Mellon University. See CMUDICT_LICENSE.\n")
    out.write("# One pronunciation per word, stress markers removed.\n")
    for word in order:
        pron = variants[word].get(OVERRIDES.get(word, 1)) or variants[word][min(variants[word])]
        out.write(f"{word}\t{' '.join(pron)}\n")


if __name__ == "__main__":
    main(sys.argv[1])
