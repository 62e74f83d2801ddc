"""Counter-based random streams.

Every random quantity in a run is addressed by ``(seed, stream, attempt,
index)``. The tuple maps directly onto the key and counter of a Philox
generator, so the numbers drawn for trial 17 do not depend on whether
trials 0..16 were evaluated first, in another thread, or at all.
"""

import numpy as np

# Stream identifiers; part of the reproducibility contract, do not renumber.
CHANNEL = 0
PROFILE = 1
LEMMA = 2
ZETA = 3

_MASK64 = (1 << 64) - 1


def stream(seed, stream_id, index=0, attempt=0):
    """Return the generator for one addressed substream.

    Parameters
    ----------
    seed : int
        Run seed. Taken modulo 2**64.
    stream_id : int
        Which family of draws (channel, profile, ...).
    index : int
        Trial or block index inside the family.
    attempt : int
        Redraw counter, incremented when a realization is rejected.

    Returns
    -------
    numpy.random.Generator
    """
    if index < 0 or attempt < 0:
        raise ValueError("index and attempt must be nonnegative")
    key = np.array([int(seed) & _MASK64, int(stream_id) & _MASK64], dtype=np.uint64)
    # Draws advance counter[0]; the upper words carry the address.
    counter = np.array([0, 0, attempt, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def complex_normal(rng, shape):
    """Draw ZMCSCG samples with unit total variance.

    Real and imaginary parts are independent with variance 1/2 each.
    """
    z = rng.standard_normal(shape + (2,) if isinstance(shape, tuple) else (shape, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)
