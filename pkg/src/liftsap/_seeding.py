import hashlib


def derive_seed(seed, *parts):
    """Stable 32-bit seed from a base seed and any number of tags.

    Independent of PYTHONHASHSEED, process, and scheduling order, so per-label
    jobs get the same streams whether they run serially or concurrently.
    """
    key = ":".join(str(p) for p in (seed,) + parts).encode("ascii")
    return int.from_bytes(hashlib.sha256(key).digest()[:4], "little")
