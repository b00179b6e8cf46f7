#!/usr/bin/env python3
"""Generates the synthetic platformer corpus under data/corpus/.

Levels are assembled from a small set of chunks (flat runs, gaps, pipes,
staircases, brick rows, bullet towers, enemies) with a fixed seed, so the
output is identical on every run.
"""
import argparse
import pathlib
import random

H = 16
GROUND = 14


class Level:
    def __init__(self, width, underground):
        self.w = width
        self.g = [["-"] * width for _ in range(H)]
        self.underground = underground
        if underground:
            for c in range(width):
                self.g[0][c] = "X"

    def put(self, col, row, tile):
        if 0 <= col < self.w and 0 <= row < H:
            self.g[row][col] = tile

    def ground(self, col):
        self.put(col, 14, "X")
        self.put(col, 15, "X")

    def text(self):
        return "\n".join("".join(r) for r in self.g) + "\n"


def build(rng, width, underground):
    lv = Level(width, underground)
    col = 0
    # Safe start and finish zones.
    for c in range(4):
        lv.ground(c)
    col = 4
    end = width - 5
    while col < end:
        kind = rng.choices(
            ["flat", "gap", "pipe", "stairs", "bricks", "bullet", "enemies", "coins"],
            weights=[3, 3, 2, 1, 3, 1, 3, 1],
        )[0]
        if kind == "flat":
            n = rng.randint(2, 5)
            for c in range(col, min(col + n, end)):
                lv.ground(c)
            col += n
        elif kind == "gap":
            n = rng.randint(1, 3)
            col += n
            for c in range(col, min(col + 2, end)):
                lv.ground(c)
            col += 2
        elif kind == "pipe":
            h = rng.randint(2, 4)
            for c in range(col, min(col + 4, end)):
                lv.ground(c)
            if col + 2 < end:
                top = GROUND - h
                lv.put(col + 1, top, "<")
                lv.put(col + 2, top, ">")
                for r in range(top + 1, GROUND):
                    lv.put(col + 1, r, "[")
                    lv.put(col + 2, r, "]")
            col += 4
        elif kind == "stairs":
            h = rng.randint(2, 4)
            span = 2 * h + 1
            for c in range(col, min(col + span, end)):
                lv.ground(c)
            for k in range(h):
                for r in range(GROUND - 1 - k, GROUND):
                    lv.put(col + k, r, "X")
                    lv.put(col + span - 1 - k, r, "X")
            col += span
        elif kind == "bricks":
            n = rng.randint(3, 6)
            row = rng.choice([9, 10]) if not underground else 10
            for c in range(col, min(col + n + 2, end)):
                lv.ground(c)
            for c in range(col + 1, min(col + 1 + n, end)):
                lv.put(c, row, rng.choice("SSS?Q"))
            if rng.random() < 0.5:
                lv.put(col + 1 + n // 2, row - 4, "o")
            col += n + 2
        elif kind == "bullet":
            h = rng.randint(1, 3)
            for c in range(col, min(col + 3, end)):
                lv.ground(c)
            lv.put(col + 1, GROUND - h - 1, "B")
            for r in range(GROUND - h, GROUND):
                lv.put(col + 1, r, "b")
            col += 3
        elif kind == "enemies":
            n = rng.randint(3, 6)
            for c in range(col, min(col + n, end)):
                lv.ground(c)
            for _ in range(rng.randint(1, 2)):
                lv.put(rng.randrange(col, min(col + n, end)), GROUND - 1, "E")
            col += n
        elif kind == "coins":
            n = rng.randint(3, 5)
            for c in range(col, min(col + n, end)):
                lv.ground(c)
                lv.put(c, 11, "o")
            col += n
    for c in range(end, width):
        lv.ground(c)
    return lv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "corpus"))
    ap.add_argument("--count", type=int, default=24)
    ap.add_argument("--seed", type=int, default=2016)
    ap.add_argument("--min-width", type=int, default=60)
    ap.add_argument("--max-width", type=int, default=100)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for old in out.glob("*.txt"):
        old.unlink()
    for i in range(args.count):
        width = rng.randint(args.min_width, args.max_width)
        underground = i % 4 == 3
        lv = build(rng, width, underground)
        name = f"{'under' if underground else 'above'}_{i:02d}.txt"
        (out / name).write_text(lv.text())


if __name__ == "__main__":
    main()
