"""Exact arithmetic on finite discrete probability mass functions.

Every latency quantity in this package is a distribution over integer time
ticks (one tick is a configurable number of microseconds, 1 us by default).
A :class:`Pmf` may be *defective*, i.e. its total mass may be below 1; the
missing mass is the probability that the modelled packet was rejected.
Defective distributions are never renormalized by the arithmetic here, so
the loss probability always stays readable as ``1 - total_mass``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Mapping

import numpy as np
from scipy.signal import fftconvolve

# Total mass may exceed 1 by at most this much (floating-point headroom).
MASS_EPS = 1e-12

# Default fraction of total mass that trimming may drop from the tail.
DEFAULT_TAIL_TOL = 1e-12

# Above this size product, convolution goes through FFT.
_FFT_THRESHOLD = 40_000


def _convolve_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.size * b.size > _FFT_THRESHOLD and min(a.size, b.size) > 1:
        out = fftconvolve(a, b)
        np.maximum(out, 0.0, out=out)  # FFT roundoff can leave ~1e-17 negatives
        return out
    return np.convolve(a, b)


class Pmf:
    """Finite PMF over consecutive integer ticks starting at ``offset``.

    Canonical form: no leading or trailing zero masses (leading zeros are
    folded into the offset).  The zero distribution (no mass anywhere) is
    represented by an empty mass array.
    """

    __slots__ = ("_offset", "_masses")

    def __init__(self, offset: int, masses: Iterable[float]):
        arr = np.asarray(list(masses) if not isinstance(masses, np.ndarray) else masses,
                         dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("masses must be one-dimensional")
        if offset < 0:
            raise ValueError(f"offset must be >= 0, got {offset}")
        if arr.size and arr.min() < 0.0:
            raise ValueError(f"negative mass {arr.min()!r}")
        total = float(arr.sum())
        if total > 1.0 + MASS_EPS:
            raise ValueError(f"total mass {total!r} exceeds 1")
        # Fold exact zeros at both ends into canonical form.
        nz = np.flatnonzero(arr)
        if nz.size == 0:
            self._offset = 0
            self._masses = np.empty(0, dtype=np.float64)
        else:
            lo, hi = int(nz[0]), int(nz[-1])
            self._offset = int(offset) + lo
            self._masses = np.array(arr[lo:hi + 1], dtype=np.float64)
        self._masses.setflags(write=False)

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def zero(cls) -> "Pmf":
        return cls(0, ())

    @classmethod
    def delta(cls, k: int, mass: float = 1.0) -> "Pmf":
        """Point mass at tick ``k``."""
        return cls(k, (mass,))

    @classmethod
    def uniform(cls, lo: int, hi: int) -> "Pmf":
        """Uniform mass on the inclusive tick range ``lo..hi``."""
        if hi < lo:
            raise ValueError("empty uniform range")
        n = hi - lo + 1
        return cls(lo, np.full(n, 1.0 / n))

    @classmethod
    def geometric(cls, p: float, cap: int | None = None, *,
                  normalize: bool = False, tol: float = DEFAULT_TAIL_TOL) -> "Pmf":
        """Geometric law ``p * (1-p)**k`` on ``k = 0..cap``.

        The truncation leaves the PMF slightly defective unless
        ``normalize=True``.  Without an explicit ``cap`` the support is cut
        where the remaining tail drops below ``tol``.
        """
        if not 0.0 < p <= 1.0:
            raise ValueError(f"p must be in (0, 1], got {p}")
        if cap is None:
            cap = 0 if p == 1.0 else max(1, int(math.ceil(math.log(tol) / math.log1p(-p))))
        ks = np.arange(cap + 1)
        masses = p * (1.0 - p) ** ks
        if normalize:
            masses = masses / masses.sum()
        return cls(0, masses)

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, float]) -> "Pmf":
        if not mapping:
            return cls.zero()
        lo, hi = min(mapping), max(mapping)
        arr = np.zeros(hi - lo + 1)
        for k, v in mapping.items():
            arr[k - lo] = v
        return cls(lo, arr)

    # ------------------------------------------------------------------
    # accessors

    @property
    def offset(self) -> int:
        return self._offset

    @property
    def masses(self) -> np.ndarray:
        """Read-only mass array; entry ``i`` is the mass at ``offset + i``."""
        return self._masses

    @property
    def total_mass(self) -> float:
        return float(self._masses.sum())

    @property
    def is_zero(self) -> bool:
        return self._masses.size == 0

    @property
    def support_max(self) -> int:
        """Largest tick carrying mass (-1 for the zero distribution)."""
        if self.is_zero:
            return -1
        return self._offset + self._masses.size - 1

    def __len__(self) -> int:
        return self._masses.size

    def __getitem__(self, k: int) -> float:
        i = k - self._offset
        if 0 <= i < self._masses.size:
            return float(self._masses[i])
        return 0.0

    def items(self) -> Iterator[tuple[int, float]]:
        for i, m in enumerate(self._masses):
            yield self._offset + i, float(m)

    def to_dense(self, size: int | None = None) -> np.ndarray:
        """Mass array indexed from tick 0 (offset padded with zeros)."""
        n = self.support_max + 1 if size is None else size
        out = np.zeros(max(n, 0))
        if not self.is_zero:
            end = min(self.support_max + 1, out.size)
            if end > self._offset:
                out[self._offset:end] = self._masses[:end - self._offset]
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Pmf):
            return NotImplemented
        return self._offset == other._offset and np.array_equal(self._masses, other._masses)

    __hash__ = None  # type: ignore[assignment]

    def approx_eq(self, other: "Pmf", tol: float = 1e-10) -> bool:
        lo = min(self._offset, other._offset)
        hi = max(self.support_max, other.support_max)
        if hi < lo:
            return True
        a = self.to_dense(hi + 1)
        b = other.to_dense(hi + 1)
        return bool(np.max(np.abs(a - b), initial=0.0) <= tol)

    def __repr__(self) -> str:
        if self.is_zero:
            return "Pmf.zero()"
        head = ", ".join(f"{k}: {m:.6g}" for k, m in list(self.items())[:4])
        more = "" if len(self) <= 4 else f", ... ({len(self)} points)"
        return f"Pmf({{{head}{more}}}, mass={self.total_mass:.6g})"

    # ------------------------------------------------------------------
    # arithmetic

    def _trim_tail(self, tol: float) -> "Pmf":
        if self.is_zero or tol <= 0.0:
            return self
        budget = tol * self.total_mass
        tail = np.cumsum(self._masses[::-1])
        drop = int(np.searchsorted(tail, budget, side="right"))
        if drop == 0:
            return self
        return Pmf(self._offset, self._masses[:-drop])

    def convolve(self, other: "Pmf", *, tail_tol: float = DEFAULT_TAIL_TOL) -> "Pmf":
        """Distribution of the sum of two independent tick counts."""
        if self.is_zero or other.is_zero:
            return Pmf.zero()
        out = _convolve_arrays(self._masses, other._masses)
        return Pmf(self._offset + other._offset, out)._trim_tail(tail_tol)

    def shift(self, ticks: int) -> "Pmf":
        """Deterministic delay added on top (offset shift)."""
        if self.is_zero:
            return self
        if self._offset + ticks < 0:
            raise ValueError("shift would move mass below tick 0")
        return Pmf(self._offset + ticks, self._masses)

    def scale(self, weight: float) -> "Pmf":
        if weight < 0.0:
            raise ValueError(f"negative weight {weight}")
        if weight == 1.0:
            return self
        return Pmf(self._offset, self._masses * weight)

    def truncate_above(self, kmax: int) -> "Pmf":
        """Drop all mass strictly above tick ``kmax`` (no renormalization)."""
        if self.is_zero or kmax >= self.support_max:
            return self
        if kmax < self._offset:
            return Pmf.zero()
        return Pmf(self._offset, self._masses[:kmax - self._offset + 1])

    def cdf_at(self, k: int) -> float:
        """P(value <= k); saturates at the (possibly defective) total mass."""
        if self.is_zero or k < self._offset:
            return 0.0
        i = k - self._offset
        if i >= self._masses.size:
            return self.total_mass
        return float(self._masses[:i + 1].sum())

    def cdf(self) -> np.ndarray:
        """Cumulative masses aligned with :attr:`masses`."""
        return np.cumsum(self._masses)

    def percentile(self, q: float) -> int | None:
        """Smallest tick k with ``cdf_at(k) >= q``; None if mass falls short.

        A defective PMF whose total mass is below ``q`` has no such tick:
        the lost packets can never meet any deadline.
        """
        if not 0.0 < q <= 1.0:
            raise ValueError(f"q must be in (0, 1], got {q}")
        if self.is_zero or self.total_mass < q - 1e-12:
            return None
        cums = np.cumsum(self._masses)
        idx = int(np.searchsorted(cums, q - 1e-12, side="left"))
        if idx >= cums.size:
            return None
        return self._offset + idx

    def mean(self) -> float:
        """Mean tick count, conditional on acceptance for defective PMFs."""
        total = self.total_mass
        if total <= 0.0:
            raise ValueError("mean of a zero-mass distribution is undefined")
        ks = np.arange(self._offset, self._offset + self._masses.size)
        return float((ks * self._masses).sum() / total)


# ----------------------------------------------------------------------
# module-level operations (thin functional aliases)

def convolve(a: Pmf, b: Pmf, *, tail_tol: float = DEFAULT_TAIL_TOL) -> Pmf:
    return a.convolve(b, tail_tol=tail_tol)


def convolve_power(b: Pmf, n: int, *, tail_tol: float = DEFAULT_TAIL_TOL) -> Pmf:
    """n-fold self-convolution via repeated squaring; requires ``n >= 1``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    result: Pmf | None = None
    base = b
    while n:
        if n & 1:
            result = base if result is None else result.convolve(base, tail_tol=tail_tol)
        n >>= 1
        if n:
            base = base.convolve(base, tail_tol=tail_tol)
    assert result is not None
    return result


def mixture(components: Iterable[tuple[float, Pmf]], *,
            tail_tol: float = DEFAULT_TAIL_TOL) -> Pmf:
    """Pointwise weighted sum ``sum_i w_i * p_i``.

    Weights must be non-negative and sum to at most 1 (a deficit leaves the
    mixture defective, which is intended).
    """
    comps = list(components)
    for w, _ in comps:
        if w < 0.0:
            raise ValueError(f"negative mixture weight {w}")
    wsum = sum(w for w, _ in comps)
    if wsum > 1.0 + MASS_EPS:
        raise ValueError(f"mixture weights sum to {wsum!r} > 1")
    live = [(w, p) for w, p in comps if w > 0.0 and not p.is_zero]
    if not live:
        return Pmf.zero()
    if len(live) == 1 and live[0][0] == 1.0:
        return live[0][1]  # exact passthrough, bitwise identical
    lo = min(p.offset for _, p in live)
    hi = max(p.support_max for _, p in live)
    acc = np.zeros(hi - lo + 1)
    for w, p in live:
        i = p.offset - lo
        acc[i:i + len(p)] += w * p.masses
    return Pmf(lo, acc)._trim_tail(tail_tol)


def cdf_at(p: Pmf, k: int) -> float:
    return p.cdf_at(k)


def percentile(p: Pmf, q: float) -> int | None:
    return p.percentile(q)


def mean(p: Pmf) -> float:
    return p.mean()
