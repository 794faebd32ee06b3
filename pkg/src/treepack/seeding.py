"""Deterministic 64-bit seed derivation.

Every randomized stage draws from ``Random(derive_seed(seed, STAGE, ...))``
where the trailing tags identify the stage, retry attempt, or item index.
The derivation is a splitmix64 fold, so any stage of a run can be replayed
in isolation from the run seed and the stage tag alone.
"""

MASK64 = (1 << 64) - 1

STAGE_EMBED = 1
STAGE_FOREST = 2
STAGE_REPAIR = 3
STAGE_ASSIGN = 4
STAGE_SAMPLE = 5


def _mix(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, *tags: int) -> int:
    """XOR-fold `tags` into `seed`, one splitmix64 step per tag."""
    x = seed & MASK64
    for t in tags:
        x = _mix(x ^ (t & MASK64))
    return x
