"""Child-seed derivation so that serial and parallel runs draw identical streams."""

import hashlib


def derive_seed(master: int, *parts) -> int:
    """Stable 63-bit seed from ``master`` and any number of tag parts.

    ``derive_seed(1, 15, "traffic")`` hashes the string ``"1|15|traffic"`` with
    SHA-256 and keeps the top 63 bits, so the mapping is identical on every
    platform and Python version.
    """
    text = "|".join(str(p) for p in (int(master),) + parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1
