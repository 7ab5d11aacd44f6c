"""Named test-function families with closed-form derivatives.

One-dimensional profiles are built from a ``derivative(k, x)`` rule; two
dimensional members are sums of products of profiles, so every mixed
partial is exact.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.polynomial import polyval

from .core import TestFunction

Profile = Callable[[int, np.ndarray], np.ndarray]

def _poly_trig(p: int, q: float, shift: int) -> Profile:
    def derivative(k: int, x: np.ndarray) -> np.ndarray:
        # sin(y + r pi/2) taken from exact quadrant shifts, never from pi/2
        y = q * x
        s, c = np.sin(y), np.cos(y)
        quadrant = (s, c, -s, -c)
        out = np.zeros_like(x, dtype=float)
        for j in range(min(k, p) + 1):
            coef = math.comb(k, j) * math.perm(p, j) * q ** (k - j)
            if coef == 0:
                continue
            out = out + coef * x ** (p - j) * quadrant[(shift + k - j) % 4]
        return out

    return derivative


def _gauss_poly(p: int) -> Profile:
    @lru_cache(maxsize=None)
    def factor(k: int) -> Polynomial:
        if k == 0:
            return Polynomial([0] * p + [1])
        prev = factor(k - 1)
        return prev.deriv() - Polynomial([0, 2]) * prev

    def derivative(k: int, x: np.ndarray) -> np.ndarray:
        return np.exp(-x * x) * polyval(x, factor(k).coef)

    return derivative


def _polynomial(coeffs: Sequence[float]) -> Profile:
    base = Polynomial(list(coeffs) or [0.0])

    @lru_cache(maxsize=None)
    def coefficients(k: int) -> np.ndarray:
        return base.deriv(k).coef

    def derivative(k: int, x: np.ndarray) -> np.ndarray:
        return polyval(x, coefficients(k)) * np.ones_like(x)

    return derivative


def _from_profile(name: str, profile: Profile, growth: int) -> TestFunction:
    return TestFunction(
        name=name,
        dim=1,
        oracle=lambda alpha, pts: profile(alpha[0], pts[:, 0]),
        growth=growth,
    )


def poly_sin(p: int, q: float = 1.0) -> TestFunction:
    """``x^p sin(q x)``."""
    return _from_profile(f"poly_sin({p},{q:g})", _poly_trig(int(p), float(q), 0), math.ceil(p / 2))


def poly_cos(p: int, q: float = 1.0) -> TestFunction:
    """``x^p cos(q x)``."""
    return _from_profile(f"poly_cos({p},{q:g})", _poly_trig(int(p), float(q), 1), math.ceil(p / 2))


def gauss_poly(p: int) -> TestFunction:
    """``exp(-x^2) x^p``; all derivatives are bounded."""
    return _from_profile(f"gauss_poly({p})", _gauss_poly(int(p)), 0)


def polynomial(*coeffs: float) -> TestFunction:
    """Polynomial with coefficients listed from the constant term upwards."""
    coeffs = [float(c) for c in coeffs]
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    degree = len(coeffs) - 1
    label = ",".join(f"{c:g}" for c in coeffs)
    return _from_profile(f"polynomial({label})", _polynomial(coeffs), math.ceil(degree / 2))


def constant(c: float) -> TestFunction:
    return polynomial(c)


FAMILIES: dict[str, Callable[..., TestFunction]] = {
    "poly_sin": poly_sin,
    "poly_cos": poly_cos,
    "gauss_poly": gauss_poly,
    "polynomial": polynomial,
    "constant": constant,
}


def make_family(name: str, *params) -> TestFunction:
    """Look up a one-dimensional family by name."""
    try:
        factory = FAMILIES[name]
    except KeyError:
        raise KeyError(f"unknown test-function family {name!r}") from None
    return factory(*params)


def product(*factors: TestFunction, coef: float = 1.0) -> TestFunction:
    """Tensor product ``coef * f_1(x_1) * ... * f_d(x_d)`` of 1-D functions."""
    if any(f.dim != 1 for f in factors):
        raise ValueError("tensor factors must be one-dimensional")
    oracles = [f.oracle for f in factors]

    def oracle(alpha, pts):
        out = np.full(len(pts), coef, dtype=float)
        for axis, (o, a) in enumerate(zip(oracles, alpha)):
            out = out * o((a,), pts[:, axis : axis + 1])
        return out

    name = "*".join(f.name for f in factors)
    if coef != 1.0:
        name = f"{coef:g}*{name}"
    return TestFunction(
        name=name,
        dim=len(factors),
        oracle=oracle,
        growth=sum(f.growth for f in factors),
        terms=((coef, tuple(factors)),),
    )


def restrict(f: TestFunction, alpha: Sequence[int], axis: int, fixed: Sequence[float]) -> TestFunction:
    """One-variable function ``s -> d^alpha f(x)`` with ``x[axis] = s``.

    The remaining coordinates are frozen at ``fixed`` (a full point whose
    ``axis`` entry is ignored).  Derivatives of the restriction are partials
    of ``f`` with the ``axis`` entry of ``alpha`` raised.
    """
    alpha = tuple(int(a) for a in alpha)
    base = np.asarray(fixed, dtype=float)
    oracle = f.oracle

    def restricted(beta, pts):
        full = np.repeat(base[None, :], len(pts), axis=0)
        full[:, axis] = pts[:, 0]
        order = list(alpha)
        order[axis] += beta[0]
        return oracle(tuple(order), full)

    order = None if f.order is None else f.order - sum(alpha)
    return TestFunction(
        name=f"d{alpha}{f.name}|axis{axis}",
        dim=1,
        oracle=restricted,
        growth=f.growth,
        order=order,
    )


def default_corpus_1d() -> list[TestFunction]:
    """``x^p sin(q x)`` for ``p <= 3``, ``q <= 2`` and ``exp(-x^2) x^p`` for ``p <= 3``."""
    corpus = [poly_sin(p, q) for p in range(4) for q in (1, 2)]
    corpus += [gauss_poly(p) for p in range(4)]
    return corpus


def default_corpus_2d() -> list[TestFunction]:
    """Five mixed polynomial-trigonometric functions of two variables."""
    return [
        product(poly_sin(0, 1), polynomial(0, 0, 1)),
        product(polynomial(0, 1), poly_cos(0, 1)),
        product(poly_sin(0, 1), poly_cos(0, 1)) + product(polynomial(0, 1), polynomial(0, 1)),
        product(polynomial(0, 0, 1), poly_sin(0, 1), coef=0.5),
        product(poly_cos(1, 1), gauss_poly(1)) + product(polynomial(1), polynomial(0, 0, 1)),
    ]
