"""Acceptance suite: every criterion runs at its documented configuration
and stated tolerance, printing one pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines as they
complete; the whole suite is sized for a laptop (a few minutes end to end,
dominated by the long spreading run and the mu sweep).
"""

import math

import numpy as np
import pytest

from nlfront.asymptotics import (estimate_linear_speed, fit_power_exponent,
                                 fit_tlogt_coefficient, level_set_positions,
                                 log_drift_check, mu_limit_experiment,
                                 sup_distance_on_window)
from nlfront.kernels import AlgebraicTail, CompactCosine, CompactUniform
from nlfront.reactions import logistic, zero_reaction
from nlfront.semiwave import minimal_speed, mu_curve, solve_semiwave, \
    stationary_profile
from nlfront.solver import ProblemSpec, SolverConfig, classify, make_plateau, run
from nlfront.validation import (Lattice, SubPowerFront, SubTLogTFront,
                                SuperSemiwave, comparison_order_check,
                                mass_flux_residual, psi_inequality_check,
                                verify_fixture)

from conftest import CRIT1_CFG, crit1_spec


def check(num, name, ok, detail):
    print(f"ACCEPTANCE {num:02d} {name}: {'PASS' if ok else 'FAIL'} — {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


# ---------------------------------------------------------------------------


def test_criterion_01_speed_consistency(crit1_run, uniform_semiwave):
    T = crit1_run.t[-1]
    c0 = uniform_semiwave.c0
    rel = abs(crit1_run.h[-1] / T - c0) / c0
    check(1, "speed consistency", rel <= 0.05,
          f"|h(T)/T - c0|/c0 = {rel:.4f} at T = {T:g}, c0 = {c0:.6f}")


def test_criterion_02_mu_monotone_speed_curve():
    kernel = CompactUniform(1.0)
    reaction = logistic(1.0, 0.004)        # u* = 250 pushes mu*u* deep into the limit
    mus = [1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0]
    curve = mu_curve(kernel, reaction, 1.0, mus)
    cstar = minimal_speed(kernel, reaction, 1.0).c_star
    increasing = bool(np.all(np.diff(curve.c) > 0.0))
    small_end = curve.c[0] < 0.1 * curve.c[3]
    big_end = abs(curve.c[-1] - cstar) / cstar <= 0.10
    check(2, "mu-monotone speed curve", increasing and small_end and big_end,
          f"c = {[f'{c:.4f}' for c in curve.c]}, c(1e-3)/c(1) = "
          f"{curve.c[0] / curve.c[3]:.4f}, c(100)/c* = {curve.c[-1] / cstar:.4f}")


@pytest.fixture(scope="module")
def cauchy_run():
    spec = ProblemSpec(variant="cauchy-full", kernel=CompactUniform(1.0),
                       reaction=logistic(1, 1), d=1.0, h0=10.0)
    cfg = SolverConfig(dx=0.05, dt=0.02, t_end=600.0, log_every=5.0,
                       snapshot_stride=40)
    return run(spec, cfg)


def test_criterion_03_dispersion_cross_check(cauchy_run):
    kernel = CompactUniform(1.0)
    ws = minimal_speed(kernel, logistic(1, 1), 1.0)
    # independent oracle: fine lambda-grid scan of the closed-form curve
    lam = np.linspace(1e-4, 6.0, 4_000_001)
    scan = float(np.min(np.sinh(lam) / lam ** 2))
    curve_ok = abs(ws.c_star - scan) <= 1e-6
    T = cauchy_run.t[-1]
    final = cauchy_run.final_state.as_field()
    x_plus = level_set_positions(final, 0.5, 1.0)[1]
    rel = abs(x_plus / T - ws.c_star) / ws.c_star
    check(3, "dispersion cross-check", curve_ok and rel <= 0.05,
          f"|c*-scan| = {abs(ws.c_star - scan):.2e}, level-set x+/T error = {rel:.4f}")


@pytest.fixture(scope="module")
def gamma15_run():
    spec = ProblemSpec(variant="halfline-fb", kernel=AlgebraicTail(1.5, 1.0),
                       reaction=logistic(1, 1), d=1.0, mu=1.0, h0=10.0)
    return run(spec, SolverConfig(dx=0.25, dt=0.05, t_end=120.0, log_every=1.0))


def test_criterion_04_accelerated_rate_gamma15(gamma15_run):
    fit = fit_power_exponent(gamma15_run, 0.5)
    p = fit.coeffs["p"]
    ok = 1.8 <= p <= 2.2 and fit.drift < 0.10
    check(4, "accelerated rate gamma=1.5", ok,
          f"exponent = {p:.4f} (theory 2), window-halving drift = {fit.drift:.4f}")


@pytest.fixture(scope="module")
def gamma2_run():
    spec = ProblemSpec(variant="halfline-fb", kernel=AlgebraicTail(2.0, 1.0),
                       reaction=logistic(1, 1), d=1.0, mu=1.0, h0=10.0)
    return run(spec, SolverConfig(dx=0.1, dt=0.05, t_end=200.0, log_every=1.0))


def test_criterion_05_accelerated_rate_gamma2(gamma2_run):
    t = np.asarray(gamma2_run.t)
    h = np.asarray(gamma2_run.h)
    T = t[-1]

    def bcoef(lo, hi):
        sel = (t >= lo) & (t <= hi)
        z = t[sel] * np.log(t[sel])
        return float(np.dot(z, h[sel]) / np.dot(z, z))

    b_prev = bcoef(T / 4, T / 2)
    b_last = bcoef(T / 2, T)
    stable = abs(b_last / b_prev - 1.0) <= 0.25
    p = fit_power_exponent(gamma2_run, 0.5).coeffs["p"]
    crossover = 1.0 < p < 1.3
    check(5, "accelerated rate gamma=2", stable and crossover,
          f"B[{T/4:g},{T/2:g}] = {b_prev:.4f}, B[{T/2:g},{T:g}] = {b_last:.4f} "
          f"(ratio {b_last/b_prev:.4f}), crossover exponent = {p:.4f}")


def test_criterion_06_logarithmic_drift(crit1_run, uniform_semiwave):
    c0 = uniform_semiwave.c0
    half = log_drift_check(crit1_run, c0, window_fraction=0.5)
    doubled = log_drift_check(crit1_run, c0, window_fraction=0.75)
    variation = abs(doubled.bound - half.bound) / half.bound
    ok = math.isfinite(half.sup_r) and variation < 0.20
    check(6, "logarithmic drift", ok,
          f"sup r = {half.sup_r:.3f}, |r|/ln t bound = {half.bound:.3f} "
          f"vs doubled-window {doubled.bound:.3f} (variation {variation:.3f})")


def test_criterion_07_interior_convergence(crit1_run, uniform_semiwave):
    c0 = uniform_semiwave.c0
    u_star = uniform_semiwave.u_star
    t = np.asarray(crit1_run.t)
    h = np.asarray(crit1_run.h)
    last3 = crit1_run.snapshots[-3:]
    dists, dists_phi = [], []
    for ts, snap in last3:
        window = (0.0, 0.5 * c0 * ts)
        h_at = float(h[np.searchsorted(t, ts)])
        dists.append(sup_distance_on_window(snap, u_star, window))
        phi_ref = lambda x, _h=h_at: uniform_semiwave.phi_at(np.asarray(x) - _h)
        dists_phi.append(sup_distance_on_window(snap, phi_ref, window))
    small = dists[-1] < 0.05 and dists_phi[-1] < 0.05
    nonincreasing = all(b <= a + 1e-12 for a, b in zip(dists, dists[1:]))
    check(7, "interior convergence", small and nonincreasing,
          f"sup|u-u*| over last three checkpoints = {[f'{d:.2e}' for d in dists]}, "
          f"sup|u-phi(x-h)| = {dists_phi[-1]:.2e}")


def test_criterion_08_limiting_problems():
    spec = ProblemSpec(variant="halfline-fb", kernel=CompactUniform(1.0),
                       reaction=logistic(1, 1), d=1.0, mu=1.0, h0=2.0,
                       u0=make_plateau(2.0, m=0.5))
    cfg = SolverConfig(dx=0.05, dt=0.002, t_end=2.5, log_every=0.25,
                       snapshot_stride=1)
    to_zero = mu_limit_experiment(spec, [1.0, 0.1, 0.01], "ToZero", cfg)
    to_inf = mu_limit_experiment(spec, [1.0, 10.0, 100.0], "ToInfinity", cfg)
    ok = (to_zero.sup_diff_monotone and to_zero.h_monotone
          and to_inf.sup_diff_monotone)
    check(8, "limiting problems", bool(ok),
          f"ToZero sup|u-v| = {[f'{v:.2e}' for v in to_zero.sup_diff]}, "
          f"h-h0 = {[f'{v:.2e}' for v in to_zero.h_shift]}; "
          f"ToInfinity sup|u-V| = {[f'{v:.2e}' for v in to_inf.sup_diff]}")


def test_criterion_09_stationary_profiles():
    kernel = CompactCosine(1.0)
    reaction = logistic(1, 1)
    profs = {d: stationary_profile(kernel, reaction, d) for d in (1e-3, 1.0, 1e3)}
    strict = all(bool(np.all(np.diff(p.U) < 0.0)) for p in profs.values())
    xs = np.linspace(-2.0, 0.0, 201)
    ordered = (np.all(profs[1e-3].U_at(xs) >= profs[1.0].U_at(xs) - 1e-12)
               and np.all(profs[1.0].U_at(xs) >= profs[1e3].U_at(xs) - 1e-12))
    sides = profs[1e-3].U[-1] > 0.5 and profs[1e3].U[-1] < 0.5
    check(9, "stationary profile d-behavior", strict and bool(ordered) and sides,
          f"U(0) = {profs[1e-3].U[-1]:.4f} / {profs[1.0].U[-1]:.4f} / "
          f"{profs[1e3].U[-1]:.4f} at d = 1e-3 / 1 / 1e3")


def test_criterion_10_fixture_certificates(cosine_semiwave):
    reaction = logistic(1, 1)
    super_fx = SuperSemiwave(wave=cosine_semiwave, kernel=CompactCosine(1.0),
                             reaction=reaction, d=1.0, mu=1.0,
                             theta=40.0, beta=1.2, l=30.0)
    rep_super = verify_fixture(super_fx, Lattice(t_values=(0.0, 1.0, 5.0, 20.0, 80.0)))

    k15 = AlgebraicTail(1.5, 1.0)
    power = SubPowerFront(kernel=k15, reaction=reaction, d=1.0, mu=1.0,
                          theta=9.0, l1=0.01, eps=0.04)
    rep_power = verify_fixture(power, Lattice(t_values=(0.0, 2.0, 5.0, 15.0, 40.0, 100.0)))
    broken = SubPowerFront(kernel=k15, reaction=reaction, d=1.0, mu=1.0,
                           theta=9.0, l1=1.0, eps=0.04)
    rep_broken = verify_fixture(broken, Lattice(t_values=(0.0, 2.0, 5.0)))

    k2 = AlgebraicTail(2.0, 1.0)
    tlogt = SubTLogTFront(kernel=k2, reaction=reaction, d=1.0, mu=1.0,
                          theta=400.0, l1=0.02, alpha=0.5, eps=0.04)
    rep_tlogt = verify_fixture(tlogt, Lattice(t_values=(0.0, 50.0, 150.0, 400.0, 1000.0)))

    kappas = [psi_inequality_check(CompactUniform(1.0), 100.0, 200.0, e).kappa_eps
              for e in (0.5, 0.2, 0.1)]
    psi_ok = (all(np.isfinite(kappas)) and kappas[0] <= kappas[1] <= kappas[2])

    ok = (rep_super.passed and rep_power.passed and rep_tlogt.passed
          and (not rep_broken.passed) and rep_broken.margins["front"] < 0.0
          and psi_ok)
    check(10, "fixture certificates", ok,
          f"super/power/tlogt margins = {rep_super.margins['interior']:.2e}/"
          f"{rep_power.margins['interior']:.2e}/{rep_tlogt.margins['interior']:.2e}, "
          f"broken front margin = {rep_broken.margins['front']:.2e}, "
          f"kappa_eps = {[f'{k:.3f}' for k in kappas]}")


def test_criterion_11_structural_oracles(crit1_run):
    kernel = CompactUniform(1.0)
    reaction = logistic(1, 1)
    zspec = ProblemSpec(variant="halfline-fb", kernel=kernel,
                        reaction=zero_reaction(), d=0.5, mu=1.0, h0=10.0,
                        u0=make_plateau(10.0, m=1.0, ramp=2.0))
    resids = []
    for k in range(3):
        cfg = SolverConfig(dx=0.05 / 2 ** k, dt=0.002 / 2 ** k, t_end=2.0,
                           log_every=0.1)
        resids.append(mass_flux_residual(run(zspec, cfg), zspec))
    order = math.log2(resids[0] / resids[1])
    order2 = math.log2(resids[1] / resids[2])
    mass_ok = resids[0] <= 1e-3 and min(order, order2) >= 0.7

    hi = ProblemSpec(variant="halfline-fb", kernel=kernel, reaction=reaction,
                     d=1.0, mu=1.0, h0=5.0, u0=make_plateau(5.0, m=1.0))
    lo = ProblemSpec(variant="halfline-fb", kernel=kernel, reaction=reaction,
                     d=1.0, mu=1.0, h0=5.0, u0=make_plateau(5.0, m=0.5))
    comp = comparison_order_check(lo, hi, SolverConfig(dx=0.1, dt=0.05, t_end=3.0,
                                                       log_every=0.5))

    spreading = classify(crit1_run, crit1_spec(kernel, reaction)) == "spreading"
    vspec = ProblemSpec(variant="halfline-fb", kernel=kernel, reaction=reaction,
                        d=4.0, mu=0.01, h0=0.2, u0=make_plateau(0.2, m=0.1, ramp=0.2))
    vlog = run(vspec, SolverConfig(dx=0.05, dt=0.04, t_end=40.0, log_every=1.0))
    vanishing = classify(vlog, vspec) == "vanishing"

    ok = mass_ok and comp.passed and spreading and vanishing
    check(11, "structural oracles", ok,
          f"mass-flux residual = {resids[0]:.2e} (orders {order:.2f}, {order2:.2f}), "
          f"comparison = {comp.passed}, dichotomy = "
          f"{'spreading' if spreading else '?'}/{'vanishing' if vanishing else '?'}")


def test_criterion_12_determinism(crit1_run, tmp_path):
    rerun = run(crit1_spec(CompactUniform(1.0), logistic(1, 1)), CRIT1_CFG)
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    crit1_run.to_csv(a)
    rerun.to_csv(b)
    identical = a.read_bytes() == b.read_bytes()
    check(12, "determinism", identical,
          f"trajectory.csv rerun identical = {identical} "
          f"({len(a.read_bytes())} bytes)")
