"""Deterministic seed derivation.

Every stream in a campaign descends from one master seed through
``SeedSequence`` entropy lists, so runs are reproducible and independent
sub-streams never collide: ``split_seed(master, role, index, ...)``.
"""

import numpy as np

# Role tags for campaign sub-streams.
ROLE_DESIGN = 1  # initialization / random-baseline draws
ROLE_ROLLOUT = 2  # simulator Bernoulli noise
ROLE_ACQUISITION = 3  # per-iteration batch proposals
ROLE_RUN = 4  # per-run master seeds in a comparison sweep


def seed_sequence(*entropy: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(tuple(int(e) for e in entropy))


def split_seed(*entropy: int) -> int:
    """Collapse an entropy list into a single reproducible 64-bit seed."""
    return int(seed_sequence(*entropy).generate_state(1, np.uint64)[0])


def generator(*entropy: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(*entropy)))
