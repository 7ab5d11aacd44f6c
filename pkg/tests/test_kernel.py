import math

import numpy as np
import pytest
from scipy.integrate import quad

from omcert.core import weight
from omcert.kernel import (
    BUMP_NORMALIZER,
    KernelParams,
    bump,
    bump_1d,
    kernel_eval,
    kernel_mass,
    kernel_prefactor,
    support_box,
)


def raw(u):
    return math.exp(-1.0 / (u * (1.0 - u))) if 0.0 < u < 1.0 else 0.0


def test_normalizer_against_refined_oracle():
    # independent oracle: adaptive quadrature split at 1/4 and 3/4
    parts = [quad(raw, a, b, epsabs=1e-16, epsrel=1e-13)[0] for a, b in [(0, 0.25), (0.25, 0.75), (0.75, 1)]]
    assert BUMP_NORMALIZER == pytest.approx(sum(parts), rel=1e-12)
    mass = quad(lambda u: float(bump_1d(u)), 0, 1, points=[0.5], epsabs=1e-14, epsrel=1e-13)[0]
    assert abs(mass - 1.0) < 1e-10


@pytest.mark.parametrize("u", [-0.5, 0.0, 1.0, 1.5, (2.0, 0.5), (0.5, -1e-9)])
def test_bump_vanishes_outside(u):
    assert bump(np.asarray(u)) == 0.0


def test_bump_positive_inside():
    u = np.random.default_rng(0).uniform(1e-2, 1 - 1e-2, size=(500, 2))
    assert np.all(bump(u) > 0)


def test_bump_is_tensor_product():
    u = np.array([0.3, 0.6])
    assert bump(u) == pytest.approx(bump_1d(0.3) * bump_1d(0.6), rel=1e-15)


class TestKernelEval:
    def test_at_x_is_zero(self):
        kp = KernelParams(0.3, 1.0, 2)
        x = np.array([1.0, -2.0])
        assert kernel_eval(x, x, kp) == 0.0

    def test_centre_value(self):
        kp = KernelParams(1.0, 0.0, 1)
        assert kernel_eval(0.5, 0.0, kp) == pytest.approx(math.exp(-4.0) / BUMP_NORMALIZER, rel=1e-15)

    def test_matches_formula_inside(self):
        kp = KernelParams(0.1, 2.0, 1)
        x = 1.5
        w = 0.1 * weight(np.array([x])) ** -2.0
        t = x + 0.37 * w
        want = 0.1**-1 * weight(np.array([x])) ** 2.0 * raw(0.37) / BUMP_NORMALIZER
        assert kernel_eval(t, x, kp) == pytest.approx(want, rel=1e-12)

    def test_outside_box_is_zero(self):
        kp = KernelParams(0.5, 1.0, 2)
        x = np.array([0.5, 0.5])
        box = support_box(x, kp)
        up = np.array(box.upper)
        for t in ([x[0] - 1e-9, x[1] + 0.01], [up[0] + 1e-9, x[1] + 0.01], [x[0] + 0.01, up[1] + 1e-6]):
            assert kernel_eval(np.array(t), x, kp) == 0.0

    def test_dimension_checks(self):
        with pytest.raises(ValueError):
            kernel_eval(np.zeros(2), np.zeros(1), KernelParams(1.0, 0.0, 1))


class TestSupportBox:
    def test_width_is_exact(self):
        kp = KernelParams(0.2, 3.0, 2)
        x = np.array([2.0, -1.0])
        box = support_box(x, kp)
        assert box.width == 0.2 * 6.0**-3
        assert box.lower == (2.0, -1.0)
        assert box.intervals[1] == (-1.0, -1.0 + box.width)


@pytest.mark.parametrize("kwargs", [dict(eps=0.0, mu=1.0), dict(eps=1.0, mu=-1.0), dict(eps=1.0, mu=0.0, d=0)])
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        KernelParams(**kwargs)


def test_random_pairs_positivity_and_support():
    rng = np.random.default_rng(7)
    for d in (1, 2):
        kp = KernelParams(0.05, 1.0, d)
        for _ in range(300):
            x = rng.uniform(-20, 20, size=d)
            w = kp.width(x)
            t = x + w * rng.uniform(-0.5, 1.5, size=d)
            val = kernel_eval(t, x, kp)
            inside = np.all((t >= x) & (t <= x + w))
            assert val >= 0.0
            if not inside:
                assert val == 0.0


@pytest.mark.parametrize(
    "x, kp",
    [
        (0.0, KernelParams(1.0, 0.0, 1)),
        (10.0, KernelParams(0.1, 2.0, 1)),
        ((3.0, -4.0), KernelParams(0.3, 1.0, 2)),
        (-1e3, KernelParams(1e-2, 5.0, 1)),
    ],
)
def test_mass_is_one(x, kp):
    assert abs(kernel_mass(np.atleast_1d(x), kp) - 1.0) < 1e-8


def test_mass_thin_box_against_refined_rule():
    kp = KernelParams(0.1, 2.0, 1)
    assert kp.width(np.array([10.0])) == pytest.approx(0.1 / 101**2)
    assert abs(kernel_mass(np.array([10.0]), kp, quad_order=480) - 1.0) < 1e-12


def test_mass_rejects_low_order():
    with pytest.raises(ValueError):
        kernel_mass(np.zeros(1), KernelParams(1.0, 0.0, 1), quad_order=1)


def test_fd_smoothness_proxy():
    """Central differences in t up to order 4 stay bounded on the box."""
    kp = KernelParams(1.0, 0.0, 1)
    t = np.linspace(0.05, 0.95, 91)
    h = 1e-3
    vals = lambda s: np.array([kernel_eval(v, 0.0, kp) for v in s])
    stencils = {1: [-0.5, 0, 0.5], 2: [1, -2, 1], 3: [-0.5, 1, 0, -1, 0.5], 4: [1, -4, 6, -4, 1]}

    def estimate(k, step):
        c = stencils[k]
        offs = np.arange(len(c)) - len(c) // 2
        return sum(ci * vals(t + o * step) for ci, o in zip(c, offs)) / step**k

    for k in stencils:
        coarse, fine = estimate(k, h), estimate(k, h / 2)
        assert np.all(np.isfinite(coarse)) and np.max(np.abs(coarse)) < 1e5
        # the estimates have converged, so the bound is a property of K
        assert np.max(np.abs(coarse - fine)) < 1e-2 * np.max(np.abs(fine))


def test_prefactor():
    kp = KernelParams(0.5, 2.0, 2)
    assert kernel_prefactor(np.array([1.0, 1.0]), kp) == pytest.approx(0.5**-2 * 3.0**4)
