"""Normalized bump, variable-bandwidth kernel and its support boxes.

``K(t, x) = eps^-d <x>^(mu d) phi((t - x) <x>^mu / eps)`` with ``phi`` a
tensor product of the 1-D bump ``exp(-1/(u(1-u)))`` on (0, 1).  The support
box of ``K(., x)`` is the one-sided cube ``[x, x + eps <x>^-mu]^d``.

All integrals over a support box are carried out in the scaled variable
``u in [0, 1]^d``: the box width ``eps <x>^-mu`` can fall far below the
spacing of floating-point numbers near ``x``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .core import as_points, weight
from .quadrature import gauss_legendre


def _raw_bump(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = (u > 0.0) & (u < 1.0)
    ui = u[inside]
    out[inside] = np.exp(-1.0 / (ui * (1.0 - ui)))
    return out


def _normalizer() -> float:
    value, _ = quad(
        lambda s: float(_raw_bump(s)), 0.0, 1.0, points=[0.5], epsabs=1e-16, epsrel=1e-14, limit=200
    )
    return value


# computed once; about 7.0298584066096e-3
BUMP_NORMALIZER = _normalizer()


def bump_1d(u) -> np.ndarray:
    """``psi(u) = exp(-1/(u(1-u))) / Z`` on (0, 1), zero elsewhere; unit mass."""
    return _raw_bump(u) / BUMP_NORMALIZER


def bump(u) -> np.ndarray | float:
    """Tensor bump ``phi(u) = prod_j psi(u_j)``, supported in ``[0, 1]^d``.

    The last axis of ``u`` holds coordinates; a scalar is a 1-D point.
    """
    arr = np.asarray(u, dtype=float)
    if arr.ndim == 0:
        return float(bump_1d(arr))
    out = np.prod(bump_1d(arr), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class KernelParams:
    """Bandwidth scale ``eps``, decay exponent ``mu`` and dimension ``d``."""

    eps: float
    mu: float
    d: int = 1

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not self.mu >= 0:
            raise ValueError(f"mu must be nonnegative, got {self.mu}")
        if self.d < 1:
            raise ValueError(f"dimension must be at least 1, got {self.d}")

    def width(self, x):
        """Side length ``eps <x>^-mu`` of the support box at ``x``."""
        return self.eps * weight(x) ** (-self.mu)

    def scaled(self, factor: float) -> "KernelParams":
        return KernelParams(self.eps * factor, self.mu, self.d)


@dataclass(frozen=True)
class SupportBox:
    """The cube ``prod_j [lower_j, lower_j + width]``."""

    lower: tuple[float, ...]
    width: float

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(a + self.width for a in self.lower)

    @property
    def intervals(self) -> list[tuple[float, float]]:
        return list(zip(self.lower, self.upper))

    def contains(self, t) -> bool:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return bool(np.all((t >= self.lower) & (t <= np.asarray(self.upper))))


def support_box(x, kp: KernelParams) -> SupportBox:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (kp.d,):
        raise ValueError(f"point of shape {x.shape} for a {kp.d}-dimensional kernel")
    return SupportBox(tuple(float(v) for v in x), float(kp.width(x)))


def kernel_eval(t, x, kp: KernelParams) -> float:
    """``K(t, x)``; exactly 0 whenever ``t`` lies outside the support box of ``x``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if t.shape != x.shape or x.shape != (kp.d,):
        raise ValueError("t and x must both be points of the kernel's dimension")
    if not support_box(x, kp).contains(t):
        return 0.0
    scale = weight(x) ** kp.mu / kp.eps
    return float(kernel_prefactor(x, kp) * bump(scale * (t - x)))


def kernel_prefactor(x, kp: KernelParams):
    """``eps^-d <x>^(mu d)``, the height scale of ``K(., x)``."""
    return kp.eps ** (-kp.d) * weight(x) ** (kp.mu * kp.d)


@lru_cache(maxsize=None)
def scaled_rule(d: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Legendre nodes on ``[0, 1]^d`` with weights times ``phi``.

    ``sum_q W_q h(u_q)`` approximates ``int h(u) phi(u) du``.  Nodes whose
    weight is below 1e-20 of the largest are dropped.
    """
    u, w = gauss_legendre(order)
    wb = w * bump_1d(u)
    keep = wb > 1e-20 * wb.max()
    u, wb = u[keep], wb[keep]
    nodes = np.array(list(itertools.product(u, repeat=d)))
    weights = np.prod(np.array(list(itertools.product(wb, repeat=d))), axis=1)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def kernel_mass(x, kp: KernelParams, quad_order: int = 48) -> float:
    """``int K(t, x) dt`` by tensor Gauss-Legendre over the support box.

    The box is parametrised as ``t = x + w u``; the Jacobian ``w^d`` and the
    kernel height ``eps^-d <x>^(mu d)`` are formed separately, and the bump is
    evaluated at the scaled nodes directly.
    """
    if quad_order < 2:
        raise ValueError("quadrature order must be at least 2")
    x = as_points(np.atleast_1d(np.asarray(x, dtype=float)), kp.d)[0]
    u, w = gauss_legendre(quad_order)
    nodes = np.array(list(itertools.product(u, repeat=kp.d)))
    weights = np.prod(np.array(list(itertools.product(w, repeat=kp.d))), axis=1)
    jacobian = kp.width(x) ** kp.d
    return float(jacobian * kernel_prefactor(x, kp) * np.sum(weights * bump(nodes)))
