"""Projective spectra: descriptors, the decomposition harness and Proj^1 of
finite towers.

Two criteria for ``Proj^1 = 0`` are instantiated.  For the matrix spectrum
the unit balls ``D_n`` of ``Y_{n,0}`` form a chain and every sample of
``Y_m`` must split as ``Y_k + D_n`` for all ``k >= m``.  For O_M the deeper
step is the projective limit itself: every ``f`` in ``X_m`` is written as
``g + (f - g)`` with ``g`` slowly increasing and ``f - g`` in ``B_{n,N}``.
The step from ``Proj^1 = 0`` to bornologicity of the limit is a classical
result on projective spectra of LB-spaces; it is used as a bridge and is not
computed here.

Membership of ``g`` in O_M is only checked through a grid proxy: finite
weighted norms of the available derivatives and a bounded log-log growth
slope.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Grid, MultiIndex, TestFunction
from .sequence_split import PatternMatrix, split
from .smoothing import AssemblyResult, assemble_1d, assemble_2d

FAMILY_TAGS = ("O_M", "s_pi_s_prime", "finite_linear")

CHAIN_VARIANT = "D_n chain: rho(X_m) in rho(X_k) + D_n for all k >= m, D_{n+1} in D_n"
LIMIT_VARIANT = "limit: rho(X_m) in rho_inf(Proj X) + D_n"
PROXY_LABEL = "grid proxy: weighted norms up to order n and log-log growth slope, not analytic membership"


@dataclass(frozen=True)
class SpectrumDescriptor:
    """A projective spectrum whose connecting maps are inclusions.

    ``family`` is ``"O_M"`` (steps ``X_n = U_N X_{n,N}`` of functions on
    R^dim) or ``"s_pi_s_prime"`` (steps ``Y_n = U_N Y_{n,N}`` of matrices).
    """

    family: str
    dim: int = 1

    def __post_init__(self):
        if self.family not in ("O_M", "s_pi_s_prime"):
            raise ValueError(f"unknown spectrum family {self.family!r}")
        if self.family == "O_M" and self.dim not in (1, 2):
            raise ValueError("O_M decompositions are implemented for dimensions 1 and 2")

    def step_parameters(self, n: int) -> tuple[int, int]:
        """The ``(m, N)`` for which ``X_m`` is decomposed into limit + ``B_{n,N}``."""
        if self.family == "s_pi_s_prime":
            return n + 1, 0
        if self.dim == 1:
            return n + 1, 0
        return 2 * n + 1, n - 1

    @property
    def variant(self) -> str:
        return CHAIN_VARIANT if self.family == "s_pi_s_prime" else LIMIT_VARIANT


@dataclass
class PRReport:
    family: str
    n: int
    m: int
    N: int
    variant: str
    tried: int
    accepted: int
    rejected: list = field(default_factory=list)
    samples: list = field(default_factory=list)
    proxy: list = field(default_factory=list)

    @property
    def vacuous(self) -> bool:
        return self.accepted == 0

    @property
    def passed(self) -> bool:
        return all(s["passed"] for s in self.samples) and all(p["passed"] for p in self.proxy)

    def to_dict(self) -> dict:
        return {
            "kind": "pr_condition",
            "family": self.family,
            "n": self.n,
            "m": self.m,
            "N": self.N,
            "variant": self.variant,
            "tried": self.tried,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "vacuous": self.vacuous,
            "membership_proxy": PROXY_LABEL if self.family == "O_M" else None,
            "samples": self.samples,
            "proxy": self.proxy,
            "passed": self.passed,
        }


def growth_slope(values: np.ndarray, points: np.ndarray) -> float:
    """Least-squares slope of ``log(1 + envelope)`` against ``log(1 + |x|)``.

    The envelope is the running maximum of ``|values|`` over shells of
    increasing radius, restricted to the outer half of the radii.
    """
    r = np.linalg.norm(np.atleast_2d(points), axis=-1) if np.ndim(points) > 1 else np.abs(points)
    order = np.argsort(r, kind="stable")
    radii = r[order]
    env = np.maximum.accumulate(np.abs(values)[order])
    outer = radii >= radii[-1] / 2
    X = np.log1p(radii[outer])
    Y = np.log1p(env[outer])
    if np.ptp(X) == 0:
        return 0.0
    return float(np.polyfit(X, Y, 1)[0])


def membership_proxy(result: AssemblyResult) -> dict:
    """Finite norms and a bounded growth slope for every available derivative of ``g``.

    The slope must stay below ``2 M + 1``: derivatives bounded by
    ``C <x>^M`` grow at most like ``|x|^(2M)``.
    """
    pts = result.grid.points
    slopes = {}
    finite = True
    for alpha in MultiIndex.up_to(result.grid.dim, result.n):
        vals = result.g.derivative(alpha, pts)
        finite &= bool(np.all(np.isfinite(vals)))
        slopes[str(alpha)] = growth_slope(vals, pts)
    cap = 2 * result.M + 1
    return {
        "function": result.function,
        "label": PROXY_LABEL,
        "slopes": slopes,
        "slope_cap": cap,
        "passed": finite and max(slopes.values()) <= cap,
    }


def check_pr_condition(
    sd: SpectrumDescriptor,
    n: int,
    corpus: Sequence,
    grid: Grid | None = None,
    k_values: Sequence[int] | None = None,
    **assemble_kwargs,
) -> PRReport:
    """Decompose every admissible corpus member and collect the certificates.

    Matrix samples (:class:`PatternMatrix`) must declare ``p >= m``; they are
    split for each ``k`` in ``k_values`` (default ``m, m+1, m+2``).  Function
    samples must support derivatives of order ``m``; they go through
    :func:`assemble_1d` or :func:`assemble_2d` on ``grid``.  Inadmissible
    members are listed under ``rejected`` and do not count as failures.
    """
    m, N = sd.step_parameters(n)
    report = PRReport(sd.family, n, m, N, sd.variant, tried=len(corpus), accepted=0)
    for idx, sample in enumerate(corpus):
        if sd.family == "s_pi_s_prime":
            if not isinstance(sample, PatternMatrix):
                report.rejected.append({"index": idx, "reason": "not a pattern matrix"})
                continue
            if sample.decay < m:
                report.rejected.append(
                    {"index": idx, "reason": f"declared Y_{{{sample.decay},{sample.growth}}} does not reach m = {m}"}
                )
                continue
            report.accepted += 1
            ks = list(k_values) if k_values is not None else [m, m + 1, m + 2]
            certs = [split(sample.matrix, n, sample.growth, k) for k in ks]
            report.samples.append(
                {
                    "index": idx,
                    "law": {"p": sample.p, "q": sample.q, "shape": list(sample.matrix.shape)},
                    "certificates": [c.to_dict(include_parts=False) for c in certs],
                    "passed": all(c.passed for c in certs),
                }
            )
        else:
            if not isinstance(sample, TestFunction) or sample.dim != sd.dim:
                report.rejected.append({"index": idx, "reason": f"not a function on R^{sd.dim}"})
                continue
            if sample.order is not None and sample.order < m:
                report.rejected.append(
                    {"index": idx, "reason": f"{sample.name} only declares order {sample.order} < m = {m}"}
                )
                continue
            if grid is None:
                grid = Grid.symmetric(sd.dim)
            report.accepted += 1
            assemble = assemble_1d if sd.dim == 1 else assemble_2d
            result = assemble(sample, n, sample.growth, grid, **assemble_kwargs)
            report.samples.append({"index": idx, **result.to_dict()})
            report.proxy.append(membership_proxy(result))
    return report


@dataclass(frozen=True, eq=False)
class FiniteLinearSpectrum:
    """Tower ``X_1 <- X_2 <- ... <- X_L`` of finite-dimensional spaces.

    ``maps[k]`` is the matrix of ``rho: X_{k+2} -> X_{k+1}`` (0-based list),
    of shape ``(dims[k], dims[k+1])``.
    """

    dims: tuple[int, ...]
    maps: tuple[np.ndarray, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 2:
            raise ValueError("a finite spectrum needs at least two levels")
        if any(d < 0 for d in dims):
            raise ValueError("level dimensions must be nonnegative")
        if len(self.maps) != len(dims) - 1:
            raise ValueError(f"{len(dims)} levels need {len(dims) - 1} connecting maps, got {len(self.maps)}")
        maps = []
        for k, mat in enumerate(self.maps):
            shape = (dims[k], dims[k + 1])
            mat = np.array(mat, dtype=float)
            if mat.ndim == 1 and mat.size == shape[0] * shape[1]:
                mat = mat.reshape(shape)
            if mat.shape != shape:
                raise ValueError(f"map {k + 2}->{k + 1} must have shape {shape}, got {mat.shape}")
            mat.setflags(write=False)
            maps.append(mat)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "maps", tuple(maps))

    @property
    def levels(self) -> int:
        return len(self.dims)

    def psi_matrix(self) -> np.ndarray:
        """Matrix of ``(x_n) -> (x_n - rho(x_{n+1}))_{n < L}``.

        The top level has no successor, so the codomain is
        ``X_1 + ... + X_{L-1}``.
        """
        col = np.concatenate([[0], np.cumsum(self.dims)])
        rows = col[:-1]
        psi = np.zeros((int(col[-2]), int(col[-1])))
        for k in range(self.levels - 1):
            r0, c0, c1 = rows[k], col[k], col[k + 1]
            psi[r0 : r0 + self.dims[k], c0 : c0 + self.dims[k]] = np.eye(self.dims[k])
            psi[r0 : r0 + self.dims[k], c1 : c1 + self.dims[k + 1]] = -self.maps[k]
        return psi

    @classmethod
    def from_json(cls, data) -> "FiniteLinearSpectrum":
        """``{"levels": L, "dims": [...], "maps": [[row-major entries], ...]}``."""
        if isinstance(data, (str, bytes)):
            data = json.loads(data)
        dims = data["dims"]
        if "levels" in data and int(data["levels"]) != len(dims):
            raise ValueError("'levels' disagrees with the length of 'dims'")
        return cls(tuple(dims), tuple(np.asarray(m, dtype=float) for m in data["maps"]))

    def to_json(self) -> dict:
        return {
            "levels": self.levels,
            "dims": list(self.dims),
            "maps": [m.ravel().tolist() for m in self.maps],
        }

    @classmethod
    def random(cls, rng: np.random.Generator, max_levels: int = 6, max_dim: int = 8) -> "FiniteLinearSpectrum":
        """Integer-valued random tower; some maps are rank deficient or zero."""
        L = int(rng.integers(2, max_levels + 1))
        dims = [int(d) for d in rng.integers(1, max_dim + 1, size=L)]
        maps = []
        for k in range(L - 1):
            kind = rng.integers(0, 3)
            shape = (dims[k], dims[k + 1])
            if kind == 0:
                mat = np.zeros(shape)
            elif kind == 1:
                r = int(rng.integers(1, min(shape) + 1))
                mat = rng.integers(-2, 3, size=(shape[0], r)) @ rng.integers(-2, 3, size=(r, shape[1]))
            else:
                mat = rng.integers(-3, 4, size=shape)
            maps.append(np.asarray(mat, dtype=float))
        return cls(tuple(dims), tuple(maps))


def proj1_finite(fs: FiniteLinearSpectrum) -> tuple[int, int]:
    """``(dim Proj, dim Proj^1)`` as nullity and cokernel dimension of ``Psi``."""
    psi = fs.psi_matrix()
    rank = int(np.linalg.matrix_rank(psi)) if psi.size else 0
    return psi.shape[1] - rank, psi.shape[0] - rank
