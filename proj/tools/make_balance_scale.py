#!/usr/bin/env python3
"""Regenerate balance-scale.data from the rule that defines the dataset.

Each row is class,LW,LD,RW,RD for every weight/distance in 1..5 (625 rows).
The class is L if LW*LD > RW*RD, R if smaller, B if equal.
"""
import itertools
import sys


def rows():
    for lw, ld, rw, rd in itertools.product(range(1, 6), repeat=4):
        left, right = lw * ld, rw * rd
        label = "L" if left > right else "R" if left < right else "B"
        yield f"{label},{lw},{ld},{rw},{rd}"


def main() -> None:
    out = sys.argv[1] if len(sys.argv) > 1 else "data/balance-scale.data"
    with open(out, "w", encoding="ascii") as fh:
        for line in rows():
            fh.write(line + "\n")


if __name__ == "__main__":
    main()
