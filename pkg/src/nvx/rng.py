"""SplitMix64, the fixed PRNG behind every seeded generator in the package.

Python's ``random`` module is deliberately avoided: its stream is not
guaranteed stable across interpreter versions, and generated workloads must
be byte-identical everywhere.
"""

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & MASK64

    def next_u64(self):
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def below(self, n):
        """Integer in ``[0, n)``; modulo reduction, bias is negligible for small n."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def between(self, lo, hi):
        """Integer in ``[lo, hi]`` inclusive."""
        return lo + self.below(hi - lo + 1)

    def random(self):
        """Float in ``[0, 1)`` built from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def choice(self, seq):
        return seq[self.below(len(seq))]

    def shuffle(self, items):
        # Fisher-Yates, in place
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items

    def sample(self, seq, k):
        pool = list(seq)
        self.shuffle(pool)
        return pool[:k]
