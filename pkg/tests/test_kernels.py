import math

import numpy as np
import pytest
from scipy import integrate

from nlfront.errors import ValidationError
from nlfront.kernels import (AlgebraicTail, CompactCosine, CompactUniform,
                             LightExponential, condition_report, evaluate,
                             exp_moment, first_moment, halfline_mass,
                             kernel_from_json, kernel_to_json, tail_mass,
                             truncate)

ALL_KERNELS = [
    CompactUniform(1.0),
    CompactUniform(2.5),
    CompactCosine(1.0),
    CompactCosine(0.7),
    AlgebraicTail(1.5, 1.0),
    AlgebraicTail(2.0, 1.0),
    AlgebraicTail(2.5, 1.0),
    AlgebraicTail(3.0, 1.0),
    LightExponential(1.0),
    LightExponential(2.0),
]


def test_uniform_eval_at_origin():
    assert evaluate(CompactUniform(1.0), 0.0) == 0.5


def test_algebraic_eval():
    k = AlgebraicTail(2.0, 1.0)
    assert k.c == pytest.approx(0.5)
    assert evaluate(k, 1.0) == pytest.approx(0.125)


@pytest.mark.parametrize("k", ALL_KERNELS, ids=lambda k: f"{k.family}-{k.params()}")
@pytest.mark.parametrize("x", [0.1, 1.0, 7.0])
def test_evenness(k, x):
    assert evaluate(k, -x) == pytest.approx(evaluate(k, x), abs=1e-15)


def test_tail_mass_examples():
    assert tail_mass(CompactUniform(1.0), 0.5) == pytest.approx(0.25)
    assert tail_mass(AlgebraicTail(2.0, 1.0), 1.0) == pytest.approx(0.25)
    assert tail_mass(CompactUniform(1.0), 1.0) == 0.0


@pytest.mark.parametrize("k", ALL_KERNELS, ids=lambda k: f"{k.family}-{k.params()}")
def test_tail_monotone_and_halfline_partition(k):
    s = np.linspace(0.0, 8.0, 200)
    tails = k.tail_mass(s)
    assert tails[0] == pytest.approx(0.5, abs=1e-12)
    assert np.all(np.diff(tails) <= 1e-15)
    for x in (0.0, 0.3, 5.0):
        assert halfline_mass(k, x) + tail_mass(k, x) == pytest.approx(1.0)


def test_halfline_examples():
    k = CompactUniform(1.0)
    assert halfline_mass(k, 0.0) == pytest.approx(0.5)
    assert halfline_mass(k, 1.0) == pytest.approx(1.0)


def test_first_moment_uniform():
    assert first_moment(CompactUniform(1.0)) == pytest.approx(0.25)


def test_first_moment_gamma3_against_quadrature():
    # analytic substitution u = 1 + x gives exactly 1/2 for (1+|x|)^-3
    k = AlgebraicTail(3.0, 1.0)
    assert first_moment(k) == pytest.approx(0.5, rel=1e-12)
    val, _ = integrate.quad(lambda x: x * k.evaluate(x), 0.0, 200.0, limit=400)
    tail_part = 200.0 * k.tail_mass(200.0) + k.tail_mass_integral(200.0)
    assert val + tail_part == pytest.approx(0.5, rel=1e-8)


def test_first_moment_divergent_gamma2():
    assert math.isinf(first_moment(AlgebraicTail(2.0, 1.0)))
    assert math.isinf(first_moment(AlgebraicTail(1.5, 1.0)))


def test_exp_moment_uniform_closed_form():
    got = exp_moment(CompactUniform(1.0), 1.0)
    assert got == pytest.approx(math.sinh(1.0), rel=1e-14)
    quad, _ = integrate.quad(lambda x: 0.5 * math.exp(x), -1.0, 1.0)
    assert got == pytest.approx(quad, rel=1e-10)


def test_exp_moment_divergent_for_heavy_tails():
    assert math.isinf(exp_moment(AlgebraicTail(1.5, 1.0), 0.5))
    assert math.isinf(exp_moment(LightExponential(1.0), 1.0))


@pytest.mark.parametrize("k", ALL_KERNELS, ids=lambda k: f"{k.family}-{k.params()}")
def test_exp_moment_at_least_one(k):
    lam = 0.5 * min(k.mgf_abscissa(), 2.0)
    if lam > 0.0:
        assert exp_moment(k, lam) >= 1.0


@pytest.mark.parametrize("k,expect", [
    (CompactUniform(1.0), (True, True)),
    (CompactCosine(1.0), (True, True)),
    (LightExponential(1.0), (True, True)),
    (AlgebraicTail(1.5, 1.0), (False, False)),
    (AlgebraicTail(2.0, 1.0), (False, False)),
    (AlgebraicTail(2.5, 1.0), (True, False)),
])
def test_condition_report_flags(k, expect):
    rep = condition_report(k)
    assert rep.satisfies_J
    assert (rep.satisfies_J1, rep.satisfies_J2) == expect
    if rep.satisfies_J2:
        assert rep.satisfies_J1   # (J2) implies (J1)


def test_gamma_classes():
    assert condition_report(AlgebraicTail(1.5, 1.0)).gamma_class == "(1,2]"
    assert condition_report(AlgebraicTail(2.0, 1.0)).gamma_class == "(1,2]"
    assert condition_report(AlgebraicTail(2.5, 1.0)).gamma_class == "(2,inf)"
    assert condition_report(CompactUniform(1.0)).gamma_class is None


@pytest.mark.parametrize("k", ALL_KERNELS, ids=lambda k: f"{k.family}-{k.params()}")
def test_unit_mass(k):
    tol = 1e-6 if isinstance(k, AlgebraicTail) else 1e-8
    assert abs(k.total_mass() - 1.0) <= tol


def test_malformed_kernel_rejected():
    with pytest.raises(ValidationError):
        CompactUniform(-1.0)
    with pytest.raises(ValidationError):
        AlgebraicTail(1.0, 1.0)
    with pytest.raises(ValidationError):
        AlgebraicTail(2.0, 0.0)
    with pytest.raises(ValidationError):
        LightExponential(0.0)


def test_condition_report_rejects_broken_density():
    class Broken(CompactUniform):
        def evaluate(self, x):
            return 2.0 * super().evaluate(x)   # mass 2, not 1

    with pytest.raises(ValidationError):
        Broken(1.0).condition_report()


def test_power_tail_bounds_hold():
    k = AlgebraicTail(1.5, 1.0)
    xs = np.linspace(k.xbar, 200.0, 500)
    vals = k.evaluate(xs)
    assert np.all(vals >= k.sigma1 * xs ** (-k.gamma) - 1e-15)
    assert np.all(vals <= k.sigma2 * xs ** (-k.gamma) + 1e-15)


# truncation -----------------------------------------------------------------


def test_truncate_plateau_region():
    k = AlgebraicTail(2.5, 1.0)
    tr = truncate(k, 5.0)
    assert tr.evaluate(3.0) == pytest.approx(k.evaluate(3.0), rel=1e-14)
    assert tr.evaluate(11.0) == 0.0
    assert tr.evaluate(-11.0) == 0.0


def test_truncate_uniform_inside_plateau_has_full_mass():
    tr = truncate(CompactUniform(1.0), 1.0)
    assert tr.mass() == pytest.approx(1.0, abs=1e-12)


def test_truncate_mass_increases_to_one():
    k = AlgebraicTail(1.5, 1.0)
    masses = [truncate(k, n).mass() for n in (1.0, 4.0, 16.0, 64.0)]
    assert np.all(np.diff(masses) > 0.0)
    assert masses[-1] < 1.0
    assert masses[-1] > 0.8
    # closed-form tail arithmetic against direct quadrature
    tr = truncate(k, 4.0)
    val, _ = integrate.quad(lambda x: tr.evaluate(x), 0.0, 8.0, limit=400)
    assert tr.tail_mass(0.0) == pytest.approx(val, rel=1e-9)


def test_truncate_pointwise_monotone_in_n():
    k = AlgebraicTail(2.0, 1.0)
    xs = np.linspace(0.0, 30.0, 301)
    prev = truncate(k, 2.0).evaluate(xs)
    for n in (4.0, 8.0, 16.0):
        cur = truncate(k, n).evaluate(xs)
        assert np.all(cur >= prev - 1e-15)
        prev = cur


def test_taps_cover_exact_mass():
    k = CompactUniform(1.0)
    taps = k.taps(0.05, 21)
    assert taps.sum() * 0.05 == pytest.approx(1.0, abs=1e-14)
    assert np.all(taps == taps[::-1])
    k2 = AlgebraicTail(1.5, 1.0)
    taps2 = k2.taps(0.25, 40)
    covered = 1.0 - 2.0 * k2.tail_mass((40 + 0.5) * 0.25)
    assert taps2.sum() * 0.25 == pytest.approx(covered, abs=1e-12)


# JSON interface --------------------------------------------------------------


@pytest.mark.parametrize("k", ALL_KERNELS, ids=lambda k: f"{k.family}-{k.params()}")
def test_json_roundtrip(k):
    assert kernel_from_json(kernel_to_json(k)) == k


def test_json_rejects_unknown():
    with pytest.raises(ValidationError):
        kernel_from_json({"family": "gaussian"})
    with pytest.raises(ValidationError):
        kernel_from_json({"family": "compact-uniform", "gamma": 2.0})
    with pytest.raises(ValidationError):
        kernel_from_json({"r": 1.0})
