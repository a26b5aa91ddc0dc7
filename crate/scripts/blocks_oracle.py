"""Writes the Blocks reference values used by the data tests.

Jump table as in Donoho & Johnstone's Blocks signal (wavethresh DJ.EX,
before its SNR rescaling).
"""
import sys

T = [0.10, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81]
H = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2]


def sgn(v):
    return (v > 0) - (v < 0)


def blocks(t):
    acc = 0.0
    for tk, hk in zip(T, H):
        acc += hk * (1 + sgn(t - tk)) / 2
    return acc


def main(path, n=2048):
    with open(path, "w", newline="\n") as f:
        for k in range(n):
            t = k / (n - 1)
            f.write(f"{t!r},{blocks(t)!r}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/fixtures/blocks_2048.csv")
