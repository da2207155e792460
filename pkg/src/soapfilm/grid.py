"""Uniform 1D grids and the grid-function containers shared by all modules."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

#: Voltage strength at which the cylinder u = 0 is stationary.
LAMBDA_CYL = math.log(2.0) ** 2

#: Minimal-surface threshold for the ring aspect ratio (literature value).
SIGMA_CRIT = 1.5

#: Distance from +-1 at which a film state counts as pinched off / touching.
EVENT_MARGIN = 1e-6


class AdmissibilityError(ValueError):
    """A film profile left the admissible set -1 < u < 1.

    ``kind`` is ``"pinch-off"`` (u near -1) or ``"touch"`` (u near +1),
    ``node`` the offending grid index.
    """

    def __init__(self, message: str, kind: str = "", node: int = -1):
        super().__init__(message)
        self.kind = kind
        self.node = node


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [a, b] with ``n`` interior nodes (``n + 2`` nodes total)."""

    a: float
    b: float
    n: int

    @cached_property
    def nodes(self) -> np.ndarray:
        # integer numerators keep the nodes exactly mirror-symmetric about the midpoint
        m = self.n + 1
        t = (2.0 * np.arange(m + 1) - m) / m
        x = 0.5 * (self.a + self.b) + 0.5 * (self.b - self.a) * t
        x[0], x[-1] = self.a, self.b
        x.setflags(write=False)
        return x

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n + 1)

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    @property
    def size(self) -> int:
        return self.n + 2


def make_uniform_grid(a: float, b: float, n: int) -> Grid1D:
    """Uniform partition of [a, b] with ``n`` interior nodes."""
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    if int(n) != n or n < 1:
        raise ValueError(f"need a positive number of interior nodes, got n={n}")
    return Grid1D(float(a), float(b), int(n))


def check_same_grid(g1: Grid1D, g2: Grid1D, what: str = "grid") -> None:
    if g1 != g2:
        raise ValueError(f"{what} mismatch: {g1} vs {g2}")


@dataclass(frozen=True)
class ZFunction:
    """Values of a function of z on a grid over [-1, 1]."""

    zgrid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.zgrid.size,):
            raise ValueError(f"expected {self.zgrid.size} values, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, zgrid: Grid1D, func: Callable[[np.ndarray], np.ndarray]) -> "ZFunction":
        return cls(zgrid, np.broadcast_to(func(zgrid.nodes), (zgrid.size,)).astype(float))

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1]

    def reflect(self) -> "ZFunction":
        return type(self)(self.zgrid, self.values[::-1].copy())


@dataclass(frozen=True)
class FilmProfile(ZFunction):
    """Film displacement u(z) with u(+-1) = 0 and -1 < u < 1 (the set S)."""

    def __post_init__(self):
        super().__post_init__()
        v = self.values
        if abs(v[0]) > 1e-12 or abs(v[-1]) > 1e-12:
            raise ValueError("film profile must vanish at z = +-1")
        if v[0] != 0.0 or v[-1] != 0.0:
            # snap roundoff such as cos(pi/2) to the exact boundary value
            v = v.copy()
            v[0] = v[-1] = 0.0
            object.__setattr__(self, "values", v)
        check_admissible(v)

    @classmethod
    def zero(cls, zgrid: Grid1D) -> "FilmProfile":
        return cls(zgrid, np.zeros(zgrid.size))

    @classmethod
    def from_interior(cls, zgrid: Grid1D, interior: np.ndarray) -> "FilmProfile":
        values = np.zeros(zgrid.size)
        values[1:-1] = interior
        return cls(zgrid, values)


def check_admissible(values: np.ndarray, margin: float = 0.0) -> None:
    """Raise :class:`AdmissibilityError` unless -1 + margin < values < 1 - margin."""
    values = np.asarray(values)
    if not np.all(np.isfinite(values)):
        raise AdmissibilityError("film profile contains non-finite values", "non-finite",
                                 int(np.flatnonzero(~np.isfinite(values))[0]))
    low = np.flatnonzero(values <= -1.0 + margin)
    if low.size:
        k = int(low[np.argmin(values[low])])
        raise AdmissibilityError(f"pinch-off: u[{k}] = {values[k]:.6g}", "pinch-off", k)
    high = np.flatnonzero(values >= 1.0 - margin)
    if high.size:
        k = int(high[np.argmax(values[high])])
        raise AdmissibilityError(f"touch: u[{k}] = {values[k]:.6g}", "touch", k)


def second_difference(values: np.ndarray, h: float) -> np.ndarray:
    """Centered second difference at interior nodes."""
    return (values[2:] - 2.0 * values[1:-1] + values[:-2]) / h**2


def first_difference(values: np.ndarray, h: float) -> np.ndarray:
    """2nd-order first derivative at every node (one-sided 3-point at the ends)."""
    return np.gradient(values, h, edge_order=2)


def fmt_float(x: float) -> str:
    """17 significant digits: enough for a bit-exact round trip through text."""
    return f"{float(x):.17g}"
