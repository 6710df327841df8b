"""Reference encoder for COCO compressed RLE strings, used to freeze vectors in test_dataset_io.cpp.

Run: python3 tests/reference/rle_reference.py
"""


def counts_to_string(counts):
    out = []
    for i, x in enumerate(counts):
        x = int(x)
        if i > 2:
            x -= int(counts[i - 2])
        more = True
        while more:
            c = x & 0x1F
            x >>= 5
            more = (x != -1) if (c & 0x10) else (x != 0)
            if more:
                c |= 0x20
            out.append(chr(c + 48))
    return "".join(out)


def column_major_counts(rows):
    h, w = len(rows), len(rows[0])
    flat = [rows[i][j] for j in range(w) for i in range(h)]
    counts, cur, run = [], 0, 0
    for v in flat:
        if v != cur:
            counts.append(run)
            cur, run = v, 0
        run += 1
    counts.append(run)
    return counts


if __name__ == "__main__":
    for counts in ([0, 4], [3, 2, 5, 1, 20], [100, 37, 2, 400, 1, 1], [5, 200, 3, 7]):
        print(counts, repr(counts_to_string(counts)))
    mask = [[1, 0, 0, 0], [0, 1, 1, 0], [0, 1, 1, 0], [0, 1, 1, 0], [0, 0, 0, 0]]
    c = column_major_counts(mask)
    print("5x4 mask", c, repr(counts_to_string(c)))
