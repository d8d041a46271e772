"""Sampled radial profiles with compact support."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator


@dataclass
class RadialProfile:
    """A nonnegative radial function sampled on [0, support_radius].

    The profile is identically zero for r >= support_radius; ``values`` and
    ``derivs`` hold f(r_i) and f'(r_i) on the strictly increasing ``grid``.
    """

    grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    support_radius: float
    _interp: PchipInterpolator | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.derivs = np.asarray(self.derivs, dtype=float)
        if self.grid.ndim != 1 or np.any(np.diff(self.grid) <= 0.0):
            raise ValueError("grid must be strictly increasing")
        if self.grid.shape != self.values.shape or self.grid.shape != self.derivs.shape:
            raise ValueError("grid/values/derivs shape mismatch")
        if np.any(self.values < 0.0):
            raise ValueError("profile values must be nonnegative")
        beyond = self.grid >= self.support_radius * (1.0 + 1e-14)
        if np.any(self.values[beyond] != 0.0) or np.any(self.derivs[beyond] != 0.0):
            raise ValueError("profile must vanish beyond its support radius")

    def __call__(self, r):
        """Evaluate the profile at radii ``r`` (monotone interpolation, 0 outside)."""
        if self._interp is None:
            self._interp = PchipInterpolator(self.grid, self.values, extrapolate=False)
        r = np.asarray(r, dtype=float)
        out = self._interp(np.clip(r, self.grid[0], self.grid[-1]))
        out = np.where(r >= self.support_radius, 0.0, out)
        return np.maximum(out, 0.0)

    @property
    def center_value(self) -> float:
        return float(self.values[0])
