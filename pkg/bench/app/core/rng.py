import json

import numpy as np


def seeded_rng(seed: int) -> np.random.Generator:
    """PCG64 stream; identical for a given seed on every platform."""
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


def derive_seed(seed: int, *keys) -> int:
    """Stable 63-bit child seed for (seed, key...) pairs, e.g. (seed, "bonsai", 32)."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for key in keys:
        if isinstance(key, str):
            entropy.extend(key.encode("utf-8"))
        else:
            entropy.append(int(key) & 0xFFFFFFFFFFFFFFFF)
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0] >> 1)


def dump_rng(rng: np.random.Generator) -> str:
    return json.dumps(rng.bit_generator.state)


def load_rng(text: str) -> np.random.Generator:
    bit_gen = np.random.PCG64()
    bit_gen.state = json.loads(text)
    return np.random.Generator(bit_gen)
