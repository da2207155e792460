"""Odd cosine sums  f(z) = sum_j a_j cos((2j+1) pi z / 2)  and a positivity test.

Dividing by cos(pi z / 2) turns an odd sum into an ordinary cosine series
sum_j b_j cos(j pi z), whose constant term dominates the rest whenever
``a_0 - sum_{j>=1} (2j+1)|a_j| > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OddCosineSum:
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ValueError("coefficients must be a non-empty 1D array")
        object.__setattr__(self, "coeffs", coeffs)

    def __call__(self, z):
        return evaluate(self, z)


def evaluate(f: OddCosineSum, z):
    """Value of the sum at ``z`` (scalar or array)."""
    z = np.asarray(z, dtype=float)
    k = (2 * np.arange(f.coeffs.size) + 1) * np.pi / 2.0
    out = np.cos(np.multiply.outer(z, k)) @ f.coeffs
    return float(out) if out.ndim == 0 else out


def odd_to_even(f: OddCosineSum) -> np.ndarray:
    """Coefficients b with f(z) / cos(pi z / 2) = sum_j b_j cos(j pi z).

    b_0 = sum_k (-1)^k a_k and b_j = 2 sum_{k>=j} (-1)^(k-j) a_k, built from
    the suffix recursion S_j = a_j - S_{j+1}.
    """
    a = f.coeffs
    suffix = np.empty_like(a)
    acc = 0.0
    for j in range(a.size - 1, -1, -1):
        acc = a[j] - acc
        suffix[j] = acc
    b = 2.0 * suffix
    b[0] = suffix[0]
    return b


def even_cosine_series(b: np.ndarray, z):
    z = np.asarray(z, dtype=float)
    out = np.cos(np.multiply.outer(z, np.arange(len(b)) * np.pi)) @ np.asarray(b, dtype=float)
    return float(out) if out.ndim == 0 else out


def positivity_bound(f: OddCosineSum) -> tuple[float, bool]:
    """C = a_0 - sum_{j>=1} (2j+1)|a_j|.

    If C > 0 then f(z) >= C cos(pi z / 2) on (-1, 1).  A non-positive C is
    returned as is: the test is only sufficient.
    """
    a = f.coeffs
    j = np.arange(1, a.size)
    C = float(a[0] - np.sum((2 * j + 1) * np.abs(a[1:])))
    return C, C > 0.0
