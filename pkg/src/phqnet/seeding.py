"""Every random stream derives from one seed plus a fixed label."""

import zlib

import numpy as np


def derive_rng(seed, label):
    return np.random.default_rng([int(seed), zlib.crc32(label.encode("utf-8"))])
