"""Points, multi-indices, grids, test functions and weighted sup-norms.

Every supremum over R^d in this package is a maximum over a finite
:class:`Grid`; a certificate is only ever as strong as the grid it states.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np


class EvaluationError(ValueError):
    """A derivative oracle failed or returned a non-finite value."""


class ParameterError(ValueError):
    """Kernel or norm parameters violate a precondition of an estimate."""


def as_points(x, dim: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a float array of shape (P, d).

    A scalar or 1-D array is read as points of a one-dimensional space when
    ``dim`` is 1 (or unknown), and as a single point otherwise.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        if dim == 1 or (dim is None and arr.size == 1):
            arr = arr.reshape(-1, 1)
        else:
            arr = arr.reshape(1, -1)
    if dim is not None and arr.shape[-1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {arr.shape}")
    return arr


def weight(x):
    """Polynomial weight ``1 + |x|^2``.

    The last axis of ``x`` holds coordinates; a bare scalar is a point of R.
    Returns a float for a single point and an array otherwise.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return 1.0 + float(arr) ** 2
    out = 1.0 + np.sum(arr * arr, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class MultiIndex:
    """A derivative order in N_0^d.

    ``a <= b`` is the entrywise partial order.  ``a < b`` is *entrywise
    strict*, i.e. every entry of ``a`` is smaller than the matching entry of
    ``b``; this is the relation under which the corner Taylor polynomial of
    the two-dimensional reconstruction is summed.
    """

    entries: tuple[int, ...]

    def __post_init__(self):
        entries = tuple(int(e) for e in self.entries)
        if not entries:
            raise ValueError("a multi-index needs at least one entry")
        if any(e < 0 for e in entries):
            raise ValueError(f"multi-index entries must be nonnegative: {entries}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def of(cls, *entries: int) -> "MultiIndex":
        return cls(tuple(entries))

    @property
    def dim(self) -> int:
        return len(self.entries)

    @property
    def order(self) -> int:
        return sum(self.entries)

    @property
    def factorial(self) -> int:
        return math.prod(math.factorial(e) for e in self.entries)

    def _check(self, other: "MultiIndex") -> None:
        if self.dim != other.dim:
            raise ValueError("multi-indices of different dimension")

    def __le__(self, other: "MultiIndex") -> bool:
        self._check(other)
        return all(a <= b for a, b in zip(self.entries, other.entries))

    def __lt__(self, other: "MultiIndex") -> bool:
        self._check(other)
        return all(a < b for a, b in zip(self.entries, other.entries))

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        self._check(other)
        return MultiIndex(tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def __str__(self) -> str:
        return "(" + ",".join(str(e) for e in self.entries) + ")"

    @classmethod
    def up_to(cls, dim: int, n: int) -> list["MultiIndex"]:
        """All multi-indices with ``|alpha| <= n``, by order then lexicographically."""
        out = [
            cls(e)
            for e in itertools.product(range(n + 1), repeat=dim)
            if sum(e) <= n
        ]
        return sorted(out, key=lambda a: (a.order, a.entries))

    @classmethod
    def strictly_below(cls, bound: "MultiIndex") -> list["MultiIndex"]:
        """All ``alpha`` with ``alpha < bound`` entrywise strictly."""
        return [cls(e) for e in itertools.product(*(range(b) for b in bound.entries))]


def _as_multi_index(alpha, dim: int) -> MultiIndex:
    if isinstance(alpha, MultiIndex):
        mi = alpha
    elif np.ndim(alpha) == 0:
        mi = MultiIndex((int(alpha),))
    else:
        mi = MultiIndex(tuple(alpha))
    if mi.dim != dim:
        raise ValueError(f"multi-index {mi} does not match dimension {dim}")
    return mi


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Grid:
    """Finite sample of R^d standing in for the whole space.

    Tensor grids keep their per-axis coordinates in ``axes``; points are the
    lexicographically ordered product of the axes.
    """

    points: np.ndarray
    axes: tuple[np.ndarray, ...] | None = None
    radius: float = 0.0
    spacing: str = "custom"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("a grid needs a nonempty (P, d) array of points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("grid points must be finite")
        order = np.lexsort(pts.T[::-1])
        object.__setattr__(self, "points", _frozen(pts[order]))
        if self.axes is not None:
            object.__setattr__(self, "axes", tuple(_frozen(a) for a in self.axes))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def counts(self) -> tuple[int, ...]:
        if self.axes is None:
            return (len(self.points),)
        return tuple(len(a) for a in self.axes)

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def from_axes(cls, axes: Sequence[np.ndarray], spacing: str = "custom") -> "Grid":
        axes = tuple(np.unique(np.asarray(a, dtype=float)) for a in axes)
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        radius = max(float(np.max(np.abs(a))) for a in axes)
        return cls(pts, axes=axes, radius=radius, spacing=spacing)

    @classmethod
    def symmetric(
        cls,
        dim: int = 1,
        radius: float = 20.0,
        count: int | None = None,
        spacing: str = "uniform",
    ) -> "Grid":
        """Tensor grid on ``[-radius, radius]^dim``.

        ``spacing`` is ``"uniform"``, ``"geometric"`` (0 plus geometrically
        spaced magnitudes, dense near the origin) or ``"mixed"`` (the union).
        Default counts are 401 per axis in 1-D and 101 otherwise.
        """
        if count is None:
            count = 401 if dim == 1 else 101
        if count < 2 or radius <= 0:
            raise ValueError("need count >= 2 and radius > 0")
        axis = symmetric_axis(radius, count, spacing)
        return cls.from_axes([axis] * dim, spacing=spacing)


def symmetric_axis(radius: float, count: int, spacing: str = "uniform") -> np.ndarray:
    uniform = np.linspace(-radius, radius, count)
    half = max((count - 1) // 2, 1)
    mags = np.geomspace(radius * 1e-3, radius, half)
    geometric = np.concatenate([-mags[::-1], [0.0], mags])
    if spacing == "uniform":
        return uniform
    if spacing == "geometric":
        return geometric
    if spacing == "mixed":
        return np.unique(np.concatenate([uniform, geometric]))
    raise ValueError(f"unknown spacing law {spacing!r}")


Oracle = Callable[[tuple[int, ...], np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class TestFunction:
    """A smooth function on R^d with an exact derivative oracle.

    ``oracle(alpha, points)`` returns the ``alpha`` partial derivative at each
    row of ``points`` (shape (P, d)).  ``order`` caps the derivative orders the
    oracle supports (``None`` for unlimited) and ``growth`` is the declared
    weight exponent M with ``||f||_{order, M}`` finite.

    ``terms`` optionally records that ``f`` is a finite sum of tensor
    products, as ``((coef, (f_1, ..., f_d)), ...)`` with 1-D factors.
    Integrals against tensor kernels then factor axis by axis.
    """

    __test__ = False  # not a pytest class

    name: str
    dim: int
    oracle: Oracle
    growth: int = 0
    order: int | None = None
    terms: tuple | None = None

    def __call__(self, x) -> np.ndarray:
        return self.derivative(0 if self.dim == 1 else (0,) * self.dim, x)

    def derivative(self, alpha, x) -> np.ndarray:
        mi = _as_multi_index(alpha, self.dim)
        if self.order is not None and mi.order > self.order:
            raise EvaluationError(
                f"{self.name}: derivative {mi} exceeds the supported order {self.order}"
            )
        pts = as_points(x, self.dim)
        try:
            return np.asarray(self.oracle(mi.entries, pts))
        except EvaluationError:
            raise
        except Exception as exc:  # noqa: BLE001 - any oracle failure is re-labelled
            raise EvaluationError(f"{self.name}: oracle failed for alpha={mi}: {exc}") from exc

    def _combine(self, other: "TestFunction", sign: float, op: str) -> "TestFunction":
        if self.dim != other.dim:
            raise ValueError("cannot combine functions of different dimension")
        orders = [o for o in (self.order, other.order) if o is not None]
        a, b = self.oracle, other.oracle
        terms = None
        if self.terms is not None and other.terms is not None:
            terms = self.terms + tuple((sign * c, fs) for c, fs in other.terms)
        return TestFunction(
            name=f"({self.name}{op}{other.name})",
            dim=self.dim,
            oracle=lambda alpha, pts: a(alpha, pts) + sign * b(alpha, pts),
            growth=max(self.growth, other.growth),
            order=min(orders) if orders else None,
            terms=terms,
        )

    def __add__(self, other: "TestFunction") -> "TestFunction":
        return self._combine(other, 1.0, "+")

    def __sub__(self, other: "TestFunction") -> "TestFunction":
        return self._combine(other, -1.0, "-")

    def scaled(self, factor: complex) -> "TestFunction":
        oracle = self.oracle
        return TestFunction(
            name=f"{factor}*{self.name}",
            dim=self.dim,
            oracle=lambda alpha, pts: factor * oracle(alpha, pts),
            growth=self.growth,
            order=self.order,
            terms=None if self.terms is None else tuple((factor * c, fs) for c, fs in self.terms),
        )


@dataclass(frozen=True)
class NormParams:
    """Derivative order ``n`` and weight exponent ``N`` of ``||.||_{n,N}``."""

    n: int
    N: int

    def __post_init__(self):
        if self.n < 0 or self.N < 0:
            raise ValueError(f"norm parameters must be nonnegative, got n={self.n}, N={self.N}")


def checked_derivative(f: TestFunction, alpha: MultiIndex, pts: np.ndarray) -> np.ndarray:
    """Oracle values with every non-finite entry reported by point and order."""
    vals = np.broadcast_to(f.derivative(alpha, pts), (len(pts),))
    bad = ~np.isfinite(vals)
    if np.any(bad):
        where = pts[np.argmax(bad)]
        raise EvaluationError(
            f"{f.name}: derivative {alpha} is not finite at x={tuple(where.tolist())}"
        )
    return vals


def weighted_derivatives(
    f: TestFunction, p: NormParams, points: np.ndarray
) -> dict[MultiIndex, np.ndarray]:
    """``<x>^{-N} |d^alpha f(x)|`` at every point for every ``|alpha| <= n``."""
    pts = as_points(points, f.dim)
    w = weight(pts) ** (-float(p.N))
    return {
        alpha: w * np.abs(checked_derivative(f, alpha, pts))
        for alpha in MultiIndex.up_to(f.dim, p.n)
    }


def weighted_sup_norm(f: TestFunction, p: NormParams, g: Grid) -> float:
    """Grid maximum of ``<x>^{-N} |d^alpha f(x)|`` over ``|alpha| <= n``."""
    if f.dim != g.dim:
        raise ValueError(f"function of dimension {f.dim} on a grid of dimension {g.dim}")
    table = weighted_derivatives(f, p, g.points)
    return float(max(np.max(v) for v in table.values()))


def finite_difference_check(f: TestFunction, alpha, g: Grid, h: float) -> float:
    """Largest deviation between the oracle and a central difference.

    For ``alpha = 0`` the oracle is compared against the evaluator itself.
    Otherwise the order-``alpha`` oracle is compared with the central
    difference, along the last axis where ``alpha`` is nonzero, of the oracle
    one order lower.  The deviation is O(h^2).
    """
    if h <= 0:
        raise ValueError("step size must be positive")
    mi = _as_multi_index(alpha, f.dim)
    pts = g.points
    if len(pts) > 1:
        gaps = [np.diff(a) for a in (g.axes or ())]
        spacing = min((float(np.min(d)) for d in gaps if len(d)), default=None)
        if spacing is not None and h > spacing / 2:
            raise ValueError(
                f"grid spacing {spacing:g} is too coarse for a stencil of step {h:g}"
            )
    exact = checked_derivative(f, mi, pts)
    if mi.order == 0:
        return float(np.max(np.abs(exact - f(pts))))
    axis = max(i for i, e in enumerate(mi.entries) if e > 0)
    lower = list(mi.entries)
    lower[axis] -= 1
    lower = MultiIndex(tuple(lower))
    step = np.zeros(f.dim)
    step[axis] = h
    plus = checked_derivative(f, lower, pts + step)
    minus = checked_derivative(f, lower, pts - step)
    return float(np.max(np.abs(exact - (plus - minus) / (2 * h))))
