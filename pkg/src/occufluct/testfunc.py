"""Gaussian-bump test functions pairing measure-valued processes down to scalars.

The bump family is closed under the Gaussian semigroup, strictly positive,
and has a closed-form integral, which is all the verification suite needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GaussianBump:
    """phi(x) = amplitude * exp(-|x - center|^2 / (2 width^2))."""

    width: float = 1.0
    amplitude: float = 1.0
    center: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        if self.width <= 0 or self.amplitude <= 0:
            raise ValueError("width and amplitude must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def integral(self) -> float:
        """Total mass: amplitude * (2 pi width^2)^(d/2)."""
        return self.amplitude * (2.0 * np.pi * self.width**2) ** (self.dim / 2.0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            r2 = (x - self.center[0]) ** 2
        else:
            r2 = np.sum((x - np.asarray(self.center)) ** 2, axis=-1)
        return self.amplitude * np.exp(-0.5 * r2 / self.width**2)

    def radial_profile(self, r):
        """Value at distance r from the center (the bump is radial about it)."""
        r = np.asarray(r, dtype=float)
        return self.amplitude * np.exp(-0.5 * r**2 / self.width**2)

    def support_radius(self, n_sigmas: float = 10.0) -> float:
        return n_sigmas * self.width


def zero_like(bump: GaussianBump):
    """The zero test function with the same geometry (for linearity checks)."""
    def z(x):
        x = np.asarray(x, dtype=float)
        shape = x.shape if bump.dim == 1 else x.shape[:-1]
        return np.zeros(shape)
    z.integral = 0.0
    return z
