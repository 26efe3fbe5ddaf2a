"""Counter-based deterministic uniform stream.

All randomness in the package flows through `uniforms`, which maps a
(seed, draw index) pair to a double in [0, 1) via the Philox counter-based
generator.  Because the stream is indexable, chunked generation reproduces
the serial sequence exactly:

    uniforms(s, a + b) == concat(uniforms(s, a), uniforms(s, b, start=a))
"""

from __future__ import annotations

import numpy as np

_INV_2_53 = 2.0**-53


def uniforms(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Draw `count` doubles in [0, 1) from the stream keyed by `seed`,
    starting at absolute draw index `start`."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    if count < 0 or start < 0:
        raise ValueError("count and start must be non-negative")
    if count == 0:
        return np.empty(0, dtype=np.float64)
    bg = np.random.Philox(key=seed)
    if start:
        bg.advance(start)
    raw = bg.random_raw(count)
    # 53 high bits of each raw 64-bit word -> uniform double in [0, 1)
    return (raw >> np.uint64(11)) * _INV_2_53
