"""Named, seeded random streams.

Every random draw in the simulator comes from ``stream(seed, purpose, *ints)``
so that, e.g., changing the estimator never perturbs a noise realisation.
"""

import numpy as np

PURPOSES = {
    "channel": 1,
    "noise": 2,
    "instance": 3,
    "trial": 4,
    "topology": 5,
}


def stream(seed, purpose, *path):
    """Independent generator for ``(seed, purpose, *path)``."""
    tag = PURPOSES[purpose]
    return np.random.default_rng(np.random.SeedSequence([int(seed), tag, *map(int, path)]))
