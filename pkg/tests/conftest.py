import numpy as np
import pytest


def gaussian_blob(cx, cy, sigma=8.0, n=128, m=None):
    m = n if m is None else m
    y, x = np.mgrid[0:n, 0:m].astype(float)
    return np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * sigma ** 2))


def textured(n=96, seed=0, dx=0.0, dy=0.0, count=6, sigma=5.0):
    """Analytic sum of random blobs, content moved by (dx, dy)."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:n, 0:n].astype(float)
    out = np.zeros((n, n))
    for _ in range(count):
        margin = min(20, n // 4)
        cx, cy = rng.uniform(margin, n - margin, size=2)
        s = sigma * rng.uniform(0.8, 1.3)
        out += rng.uniform(0.5, 1.0) * np.exp(-((x - dx - cx) ** 2 + (y - dy - cy) ** 2) / (2 * s * s))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
