#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Independent reference for the frozen golden files in tests/golden.

Reimplements splitmix64 + xoshiro256** and the scalar GRU step in plain
Python so the C++ code is checked against a separate code path. Run once;
the outputs are committed and never regenerated from the C++ side.
"""
import math
import os

MASK = (1 << 64) - 1


HEADER = "# SPDX-License-Identifier: Apache-2.0\n"


def splitmix64(state):
    state = (state + 0x9E3779B97F4A7C15) & MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return state, z ^ (z >> 31)


def rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK


class Xoshiro:
    def __init__(self, seed):
        self.s = []
        x = seed
        for _ in range(4):
            x, w = splitmix64(x)
            self.s.append(w)

    def next(self):
        s = self.s
        result = (rotl((s[1] * 5) & MASK, 7) * 9) & MASK
        t = (s[1] << 17) & MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
        return result

    def uniform(self, lo=0.0, hi=1.0):
        u = (self.next() >> 11) * 2.0 ** -53
        return lo + (hi - lo) * u


def uniform_init(rows, cols, lo, hi, rng):
    return [[rng.uniform(lo, hi) for _ in range(cols)] for _ in range(rows)]


def matvec(m, x):
    return [sum(a * b for a, b in zip(row, x)) for row in m]


def sig(v):
    return 1.0 / (1.0 + math.exp(-v))


def main():
    out_dir = os.path.join(os.path.dirname(__file__), "..", "golden")
    os.makedirs(out_dir, exist_ok=True)

    rng = Xoshiro(42)
    m = uniform_init(3, 4, -0.05, 0.05, rng)
    with open(os.path.join(out_dir, "uniform_init_3x4_seed42.txt"), "w") as f:
        f.write(HEADER)
        for row in m:
            f.write(" ".join("%.17g" % v for v in row) + "\n")

    rng = Xoshiro(7)
    with open(os.path.join(out_dir, "rng_seed7_u64.txt"), "w") as f:
        f.write(HEADER)
        for _ in range(8):
            f.write("%d\n" % rng.next())

    # GRU cell, D=3, H=2; weights drawn in the order w_xr, w_xz, w_xh,
    # w_hr, w_hz, w_hh from seed 42, range [-0.05, 0.05].
    rng = Xoshiro(42)
    w_xr = uniform_init(2, 3, -0.05, 0.05, rng)
    w_xz = uniform_init(2, 3, -0.05, 0.05, rng)
    w_xh = uniform_init(2, 3, -0.05, 0.05, rng)
    w_hr = uniform_init(2, 2, -0.05, 0.05, rng)
    w_hz = uniform_init(2, 2, -0.05, 0.05, rng)
    w_hh = uniform_init(2, 2, -0.05, 0.05, rng)
    x = [1.0, 0.0, -1.0]
    hp = [0.1, 0.1]
    r = [sig(a + b) for a, b in zip(matvec(w_xr, x), matvec(w_hr, hp))]
    z = [sig(a + b) for a, b in zip(matvec(w_xz, x), matvec(w_hz, hp))]
    rh = [a * b for a, b in zip(r, hp)]
    hbar = [math.tanh(a + b) for a, b in zip(matvec(w_xh, x), matvec(w_hh, rh))]
    h = [(1 - zi) * hi + zi * hb for zi, hi, hb in zip(z, hp, hbar)]
    with open(os.path.join(out_dir, "gru_cell_d3_h2_seed42.txt"), "w") as f:
        f.write(HEADER)
        for name, v in (("r", r), ("z", z), ("hbar", hbar), ("h", h)):
            f.write(name + " " + " ".join("%.17g" % e for e in v) + "\n")


if __name__ == "__main__":
    main()
