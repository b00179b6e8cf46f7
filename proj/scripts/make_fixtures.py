#!/usr/bin/env python3
"""Writes the hand-built test fixtures under data/fixtures/."""
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "fixtures"
H = 16


def grid(width, fill="-"):
    return [[fill] * width for _ in range(H)]


def floor(g, rows=(14, 15), cols=None, tile="X"):
    for r in rows:
        for c in cols if cols is not None else range(len(g[0])):
            g[r][c] = tile


def put(g, col, row, tile):
    g[row][col] = tile


def pipe(g, col, height, ground=14):
    top = ground - height
    put(g, col, top, "<")
    put(g, col + 1, top, ">")
    for r in range(top + 1, ground):
        put(g, col, r, "[")
        put(g, col + 1, r, "]")


def write(name, g):
    text = "\n".join("".join(row) for row in g) + "\n"
    (OUT / name).write_text(text)


def main():
    OUT.mkdir(parents=True, exist_ok=True)

    # 12 columns, two-wide gap at columns 5-6, one enemy on the ground.
    g = grid(12)
    floor(g, cols=[c for c in range(12) if c not in (5, 6)])
    put(g, 9, 13, "E")
    write("flat_gap.txt", g)

    # 10 columns, solid bottom row only.
    g = grid(10)
    floor(g, rows=(15,))
    write("corridor.txt", g)

    # Ceiling at row 13 over a floor at row 15: walking is the only move.
    g = grid(8)
    floor(g, rows=(15,))
    floor(g, rows=(13,))
    write("low_ceiling.txt", g)

    # Rightmost three columns solid from top to bottom.
    g = grid(10)
    floor(g)
    for c in (7, 8, 9):
        for r in range(H):
            put(g, c, r, "X")
    write("blocked_end.txt", g)

    # Gap wider than any jump.
    g = grid(20)
    floor(g, cols=[c for c in range(20) if not 6 <= c <= 13])
    write("wide_pit.txt", g)

    # A single pipe whose left half sits in an odd column.
    g = grid(6)
    floor(g)
    pipe(g, 3, 2)
    write("pipe.txt", g)

    # Pipes of growing height.
    g = grid(24)
    floor(g)
    pipe(g, 4, 2)
    pipe(g, 10, 3)
    pipe(g, 17, 4)
    write("pipes.txt", g)

    # Staircase up then down.
    g = grid(20)
    floor(g)
    for k in range(4):
        for r in range(13 - k, 14):
            put(g, 6 + k, r, "X")
            put(g, 13 - k, r, "X")
    write("stairs.txt", g)

    # Several gap widths.
    g = grid(30)
    floor(g, cols=[c for c in range(30) if c not in (5, 11, 12, 18, 19, 20, 25)])
    write("gaps.txt", g)

    # Raised platforms with bricks and ?-blocks.
    g = grid(24)
    floor(g)
    for c in range(6, 11):
        put(g, c, 10, "S")
    put(g, 8, 10, "?")
    put(g, 9, 10, "Q")
    for c in range(14, 18):
        put(g, c, 9, "S")
    put(g, 15, 6, "o")
    put(g, 16, 6, "o")
    put(g, 12, 13, "E")
    write("platforms.txt", g)

    # Floating platform needed to cross a wide pit.
    g = grid(26)
    floor(g, cols=[c for c in range(26) if not 8 <= c <= 16])
    for c in range(11, 14):
        put(g, c, 11, "X")
    write("island.txt", g)

    # Underground: ceiling row plus a brick roof over part of the level.
    g = grid(22)
    floor(g)
    floor(g, rows=(0,))
    for c in range(5, 17):
        put(g, c, 9, "S")
    put(g, 10, 13, "E")
    put(g, 14, 13, "E")
    write("underground.txt", g)

    # Bullet bill towers.
    g = grid(18)
    floor(g)
    put(g, 5, 11, "B")
    put(g, 5, 12, "b")
    put(g, 5, 13, "b")
    put(g, 11, 12, "B")
    put(g, 11, 13, "b")
    write("bullets.txt", g)

    # Drop down from a high ledge to lower ground.
    g = grid(16)
    for c in range(0, 6):
        for r in range(9, 16):
            put(g, c, r, "X")
    floor(g, cols=range(6, 16))
    write("drop.txt", g)

    # Climb onto a higher plateau and stay there.
    g = grid(16)
    floor(g, cols=range(0, 7))
    for c in range(7, 16):
        for r in range(11, 16):
            put(g, c, r, "X")
    write("climb.txt", g)

    # Enemies spread on flat ground.
    g = grid(14)
    floor(g)
    for c in (3, 6, 7, 11):
        put(g, c, 13, "E")
    write("enemies.txt", g)

    # Wall too high to jump, with a step that makes it climbable.
    g = grid(14)
    floor(g)
    for r in range(8, 14):
        put(g, 8, r, "X")
    for r in range(11, 14):
        put(g, 6, r, "S")
    write("step_wall.txt", g)

    # Wall too high to jump at all.
    g = grid(12)
    floor(g)
    for r in range(7, 14):
        put(g, 6, r, "X")
    write("high_wall.txt", g)

    # Coins and power-ups only (no gaps, no enemies).
    g = grid(12)
    floor(g)
    put(g, 3, 10, "Q")
    put(g, 4, 10, "?")
    put(g, 5, 10, "Q")
    put(g, 8, 11, "o")
    write("rewards.txt", g)

    # 20-column training level for the memorization oracle.
    g = grid(20)
    floor(g, cols=[c for c in range(20) if c not in (9, 10)])
    pipe(g, 4, 2)
    put(g, 13, 10, "?")
    put(g, 14, 10, "S")
    put(g, 15, 10, "Q")
    put(g, 16, 13, "E")
    write("tiny_level.txt", g)

    # Error fixtures.
    g = grid(5)
    floor(g)
    lines = ["".join(row) for row in g]
    lines[7] = lines[7][:-1]
    (OUT / "bad_ragged.txt").write_text("\n".join(lines) + "\n")
    lines = ["".join(row) for row in g][:15]
    (OUT / "bad_height.txt").write_text("\n".join(lines) + "\n")
    lines = ["".join(row) for row in g]
    lines[12] = "--Z--"
    (OUT / "bad_char.txt").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
