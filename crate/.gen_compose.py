#!/usr/bin/env python3
"""One-shot generator for the Allen composition table (13x13 bitmasks)."""
from itertools import product

REL = ["Before", "Meets", "Overlaps", "Starts", "During", "Finishes", "Equals",
       "After", "MetBy", "OverlappedBy", "StartedBy", "Contains", "FinishedBy"]

SIG = {
    (-1, -1, -1, -1): 0,   # Before
    (-1, -1, 0, -1): 1,    # Meets
    (-1, -1, 1, -1): 2,    # Overlaps
    (0, -1, 1, -1): 3,     # Starts
    (1, -1, 1, -1): 4,     # During
    (1, -1, 1, 0): 5,      # Finishes
    (0, -1, 1, 0): 6,      # Equals
    (1, 1, 1, 1): 7,       # After
    (1, 0, 1, 1): 8,       # MetBy
    (1, -1, 1, 1): 9,      # OverlappedBy
    (0, -1, 1, 1): 10,     # StartedBy
    (-1, -1, 1, 1): 11,    # Contains
    (-1, -1, 1, 0): 12,    # FinishedBy
}


def cmp(x, y):
    return -1 if x < y else (0 if x == y else 1)


def rel(p, q):
    return SIG[(cmp(p[0], q[0]), cmp(p[0], q[1]), cmp(p[1], q[0]), cmp(p[1], q[1]))]


table = [[0] * 13 for _ in range(13)]
for v in product(range(6), repeat=6):
    a, b, c = (v[0], v[1]), (v[2], v[3]), (v[4], v[5])
    if not (a[0] < a[1] and b[0] < b[1] and c[0] < c[1]):
        continue
    table[rel(a, b)][rel(b, c)] |= 1 << rel(a, c)

# every cell must be non-empty
assert all(all(cell for cell in row) for row in table)
# spot checks
assert table[0][0] == 1            # before;before = {before}
assert table[0][7] == 0x1FFF       # before;after = all 13
assert table[2][4] == (1 << 2) | (1 << 3) | (1 << 4)  # overlaps;during = {o,s,d}
for i in range(13):
    assert table[i][6] == 1 << i   # r;equals = {r}
    assert table[6][i] == 1 << i   # equals;r = {r}

for i, row in enumerate(table):
    cells = ", ".join("0x%04X" % m for m in row)
    print("    [%s], // %s" % (cells, REL[i].lower()))
