#!/usr/bin/env python3
"""Reference vectors for the context hash, seed derivation and green sets.

Usage: python3 gen_hash_vectors.py > hash_vectors.txt
"""

M = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix(x):
    x &= M
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & M
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & M
    x ^= x >> 31
    return x


def context_hash(tokens, key):
    h = mix(key ^ GOLDEN)
    for t in tokens:
        h = mix(h ^ ((t + GOLDEN) & M))
    return h


def derive_seed(base, tag):
    return mix(mix(base ^ GOLDEN) ^ ((tag + GOLDEN) & M))


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & M

    def next(self):
        self.state = (self.state + GOLDEN) & M
        return mix(self.state)


def uniform_index(rng, n):
    x = rng.next()
    m = x * n
    low = m & M
    if low < n:
        threshold = ((1 << 64) - n) % n
        while low < threshold:
            x = rng.next()
            m = x * n
            low = m & M
    return m >> 64


def green_set(seed, vocab, gamma):
    count = int(gamma * vocab)
    perm = list(range(vocab))
    rng = SplitMix64(seed)
    for i in range(count):
        j = i + uniform_index(rng, vocab - i)
        perm[i], perm[j] = perm[j], perm[i]
    return perm[:count]


def main():
    for x in [0, 1, 2, 0x9E3779B97F4A7C15, M, 1234567]:
        print("mix", x, mix(x))
    rng = SplitMix64(1234567)
    print("stream 1234567", *[rng.next() for _ in range(5)])
    cases = [
        (0, []),
        (42, [256]),
        (42, [0]),
        (42, [17]),
        (7, [3, 1, 4]),
        (M, [255, 255]),
        (123456789, [256, 256, 256, 12]),
    ]
    for key, toks in cases:
        print("ctx", key, len(toks), *toks, context_hash(toks, key))
    for base, tag in [(0, 0), (1, 1), (42, 16), (M, 3)]:
        print("derive", base, tag, derive_seed(base, tag))
    for seed, vocab, gamma in [(1, 16, 0.25), (context_hash([17], 42), 256, 0.25), (99, 10, 0.5)]:
        g = green_set(seed, vocab, gamma)
        print("green", seed, vocab, gamma, len(g), *g)


if __name__ == "__main__":
    main()
