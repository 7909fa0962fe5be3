import hashlib

import numpy as np


def derive_seed(seed, purpose):
    """
    Stable 64-bit sub-seed for one named random stream.
    """
    digest = hashlib.sha256(f"{int(seed)}/{purpose}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def rng_for(seed, purpose):
    return np.random.default_rng(derive_seed(seed, purpose))
