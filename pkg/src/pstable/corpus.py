"""Seeded random smooth fields vanishing on the domain boundary."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .fields import CartesianField, RadialField, ball_volume, radial_mesh


@dataclass(frozen=True)
class Bump:
    center: np.ndarray
    radius: float
    amplitude: float


def _bumps(rng: np.random.Generator, d: int, k: int, reach: float) -> List[Bump]:
    out = []
    for _ in range(k):
        rad = rng.uniform(0.4, 0.7) * reach
        # keep the support inside the ball of radius ``reach``
        direction = rng.normal(size=d)
        direction /= np.linalg.norm(direction)
        c = direction * rng.uniform(0.0, reach - rad)
        out.append(Bump(c, rad, rng.uniform(0.3, 1.0)))
    return out


def bump_field(bumps, d: int, shape: int = 71, power: int = 4, reach: float = 1.0,
               box: float = 1.05) -> CartesianField:
    """Sum of a (1 - |x-c|^2/rad^2)_+^power on a grid over the unit ball (mask)."""

    def fn(*xs):
        X = np.stack(xs)
        out = np.zeros(xs[0].shape)
        for b in bumps:
            r2 = np.sum((X - b.center.reshape((-1,) + (1,) * d)) ** 2, axis=0) / b.radius ** 2
            out += b.amplitude * np.clip(1.0 - r2, 0.0, None) ** power
        return out

    return CartesianField.from_function(fn, -box, box, (shape,) * d,
                                        mask_fn=lambda *xs: sum(x * x for x in xs) < reach ** 2,
                                        domain_volume=ball_volume(d) * reach ** d)


def corpus(seed: int, count: int, d: int = 3, shape: int = 71, max_bumps: int = 3,
           power: int = 4) -> List[CartesianField]:
    """``count`` reproducible grid fields; each is a superposition of 1..max_bumps bumps."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    rng = np.random.default_rng(seed)
    fields = []
    for _ in range(count):
        k = int(rng.integers(1, max_bumps + 1))
        fields.append(bump_field(_bumps(rng, d, k, 0.95), d, shape, power))
    return fields


def radial_corpus(seed: int, count: int, n: int, m: int = 2000) -> List[RadialField]:
    """Nonincreasing profiles sum_j a_j (1 - (r/w_j)^2)_+^k_j + b (1 - r)^2 in dimension n."""
    rng = np.random.default_rng(seed)
    r = radial_mesh(m, 1.0, 1.0)
    out = []
    for _ in range(count):
        vals = np.zeros_like(r)
        for _ in range(int(rng.integers(1, 4))):
            k = rng.uniform(1.0, 4.0)
            a = rng.uniform(0.2, 1.0)
            w = rng.uniform(0.3, 1.0)
            vals += a * np.clip(1.0 - (r / w) ** 2, 0.0, None) ** k
        vals += rng.uniform(0.0, 0.5) * (1.0 - r) ** 2
        vals[-1] = 0.0
        out.append(RadialField(n, r, vals))
    return out
