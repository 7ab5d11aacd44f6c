"""Weighted matrix norms and the threshold splitting ``x = y + z``.

Matrices are finite truncations of doubly indexed arrays; row index ``i`` and
column index ``j`` start at 1.  ``||x||_{n,N} = max_{i,j} i^n j^-N |x_ij|``.

For ``m = n + 1`` and ``c = ||x||_{m,M}`` the split keeps ``y_ij = x_ij``
where ``i < c j^M`` and moves everything else to ``z``.  Then
``||z||_{n,0} <= 1`` and ``||y||_{k,K} <= c^(k-m+1)`` for ``K = M (k-m+1)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# relative guard on c when re-verifying the bounds in floating point
THRESHOLD_GUARD = 1e-12


@dataclass(frozen=True, eq=False)
class WeightedMatrix:
    """Truncation ``(x_ij)`` for ``1 <= i <= I``, ``1 <= j <= J``."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=complex)
        if arr.ndim != 2 or 0 in arr.shape:
            raise ValueError("a weighted matrix needs a nonempty 2-D array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def __add__(self, other: "WeightedMatrix") -> "WeightedMatrix":
        return WeightedMatrix(self.entries + other.entries)

    def scaled(self, factor: complex) -> "WeightedMatrix":
        return WeightedMatrix(factor * self.entries)

    def index_grids(self) -> tuple[np.ndarray, np.ndarray]:
        I, J = self.shape
        return np.arange(1, I + 1, dtype=float)[:, None], np.arange(1, J + 1, dtype=float)[None, :]

    @classmethod
    def from_law(cls, I: int, J: int, p: int, q: int, amplitudes=None) -> "WeightedMatrix":
        """``x_ij = a_ij i^-p j^q`` with ``a_ij = 1`` unless ``amplitudes`` is given."""
        i = np.arange(1, I + 1, dtype=float)[:, None]
        j = np.arange(1, J + 1, dtype=float)[None, :]
        law = i ** (-float(p)) * j ** float(q)
        if amplitudes is not None:
            law = law * np.asarray(amplitudes)
        return cls(law)


def matrix_norm(x: WeightedMatrix, n: int, N: int) -> float:
    """``max i^n j^-N |x_ij|`` over the truncation."""
    i, j = x.index_grids()
    return float(np.max(i**n * j ** (-float(N)) * np.abs(x.entries)))


@dataclass
class SplitCertificate:
    n: int
    m: int
    M: int
    k: int
    K: int
    c: float
    y: WeightedMatrix
    z: WeightedMatrix
    z_norm: float
    y_norm: float
    y_bound: float

    @property
    def z_passed(self) -> bool:
        return self.z_norm <= 1.0 + THRESHOLD_GUARD

    @property
    def y_passed(self) -> bool:
        return self.y_norm <= self.y_bound

    @property
    def passed(self) -> bool:
        return self.z_passed and self.y_passed

    @property
    def degenerate(self) -> bool:
        return self.c == 0.0

    def to_dict(self, include_parts: bool = True) -> dict:
        out = {
            "kind": "split",
            "n": self.n,
            "m": self.m,
            "M": self.M,
            "k": self.k,
            "K": self.K,
            "c": self.c,
            "shape": list(self.y.shape),
            "z_norm": self.z_norm,
            "y_norm": self.y_norm,
            "y_bound": self.y_bound,
            "z_passed": self.z_passed,
            "y_passed": self.y_passed,
            "degenerate": self.degenerate,
            "passed": self.passed,
        }
        if include_parts:
            out["y"] = _complex_rows(self.y.entries)
            out["z"] = _complex_rows(self.z.entries)
        return out


def _complex_rows(arr: np.ndarray) -> list:
    if np.all(arr.imag == 0):
        return arr.real.tolist()
    return [[[v.real, v.imag] for v in row] for row in arr]


def split(x: WeightedMatrix, n: int, M: int, k: int) -> SplitCertificate:
    """Split ``x`` at the threshold ``i < c j^M`` with ``c = ||x||_{n+1,M}``.

    Entries are copied, never recomputed, so ``y + z == x`` exactly and the
    supports are disjoint.  Ties ``i == c j^M`` go to ``z``.
    """
    m = n + 1
    if k < m:
        raise ValueError(f"k must be at least m = n + 1 = {m}, got {k}")
    if M < 0 or n < 0:
        raise ValueError("n and M must be nonnegative")
    K = M * (k - m + 1)
    c = matrix_norm(x, m, M)
    i, j = x.index_grids()
    keep = i < c * j**M
    y = WeightedMatrix(np.where(keep, x.entries, 0))
    z = WeightedMatrix(np.where(keep, 0, x.entries))
    guarded = c * (1.0 + THRESHOLD_GUARD)
    return SplitCertificate(
        n=n,
        m=m,
        M=M,
        k=k,
        K=K,
        c=c,
        y=y,
        z=z,
        z_norm=matrix_norm(z, n, 0),
        y_norm=matrix_norm(y, k, K),
        y_bound=guarded ** (k - m + 1),
    )


def read_matrix_csv(path) -> WeightedMatrix:
    """Read a sparse listing with header ``i,j,re,im`` (1-based indices)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [h.strip() for h in reader.fieldnames] != ["i", "j", "re", "im"]:
            raise ValueError(f"{path}: expected header i,j,re,im")
        rows = [(int(r["i"]), int(r["j"]), float(r["re"]), float(r["im"])) for r in reader]
    if not rows:
        raise ValueError(f"{path}: no entries")
    if min(min(r[0], r[1]) for r in rows) < 1:
        raise ValueError(f"{path}: indices are 1-based")
    I = max(r[0] for r in rows)
    J = max(r[1] for r in rows)
    arr = np.zeros((I, J), dtype=complex)
    for i, j, re, im in rows:
        arr[i - 1, j - 1] = complex(re, im)
    return WeightedMatrix(arr)


def write_matrix_csv(x: WeightedMatrix, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "re", "im"])
        I, J = x.shape
        for a in range(I):
            for b in range(J):
                v = x.entries[a, b]
                writer.writerow([a + 1, b + 1, repr(float(v.real)), repr(float(v.imag))])


@dataclass(frozen=True)
class PatternMatrix:
    """A corpus matrix with its generating law ``a_ij i^-p j^q`` (``|a_ij| <= 1``).

    The law declares membership in ``Y_{p,q}``: ``||x||_{p,q} <= 1``.
    """

    matrix: WeightedMatrix
    p: int
    q: int

    @property
    def decay(self) -> int:
        return self.p

    @property
    def growth(self) -> int:
        return self.q


def pattern_corpus(
    count: int,
    seed: int,
    max_size: int = 50,
    max_p: int = 3,
    max_q: int = 3,
    min_p: int = 0,
) -> list[PatternMatrix]:
    """Seeded matrices ``a_ij i^-p j^q`` with random sizes, exponents and amplitudes."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        I, J = (int(v) for v in rng.integers(1, max_size + 1, size=2))
        p = int(rng.integers(min_p, max_p + 1))
        q = int(rng.integers(0, max_q + 1))
        amp = rng.uniform(-1.0, 1.0, size=(I, J))
        out.append(PatternMatrix(WeightedMatrix.from_law(I, J, p, q, amp), p, q))
    return out
