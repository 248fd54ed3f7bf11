"""Phase-space grids: periodic spatial cells and a velocity grid for
quadrature, the discrete-velocity reference solver and particle histograms."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Spatial cells on [0, Lx) and velocity nodes on [-Lv/2, Lv/2].

    Velocity nodes include both endpoints and carry trapezoid weights;
    histogram binning uses Nv equal bins over the same interval.
    """

    Lx: float = 4.0 * np.pi
    Nx: int = 128
    Lv: float = 20.0
    Nv: int = 512

    def __post_init__(self):
        if self.Lx <= 0 or self.Lv <= 0:
            raise ValueError("domain lengths must be positive")
        if self.Nx < 1 or self.Nv < 2:
            raise ValueError("need Nx >= 1 and Nv >= 2")

    @property
    def dx(self) -> float:
        return self.Lx / self.Nx

    @property
    def x_centers(self) -> np.ndarray:
        return (np.arange(self.Nx) + 0.5) * self.dx

    @property
    def v_nodes(self) -> np.ndarray:
        return np.linspace(-0.5 * self.Lv, 0.5 * self.Lv, self.Nv)

    @property
    def v_weights(self) -> np.ndarray:
        # trapezoid: half weight at the two endpoints
        dv = self.Lv / (self.Nv - 1)
        w = np.full(self.Nv, dv)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    @property
    def v_bin_edges(self) -> np.ndarray:
        return np.linspace(-0.5 * self.Lv, 0.5 * self.Lv, self.Nv + 1)

    @property
    def v_bin_centers(self) -> np.ndarray:
        e = self.v_bin_edges
        return 0.5 * (e[:-1] + e[1:])

    @property
    def dv_bin(self) -> float:
        return self.Lv / self.Nv

    def cell_index(self, x) -> np.ndarray:
        """Nearest-grid-point cell of each position (periodic)."""
        return (np.floor(np.asarray(x) / self.dx).astype(np.int64)) % self.Nx

    def wrap(self, x) -> np.ndarray:
        return np.mod(x, self.Lx)
