"""Machine checks of the explicit super/sub-solution constructions and the
cross-cutting numerical oracles (mass-flux identity, comparison ordering,
refinement order, the cutoff-function inequality).

Each fixture is a closed-form candidate (profile, front path) together
with the inequality system it must satisfy pointwise.  ``verify_fixture``
evaluates every inequality on a (t, x) lattice: time derivatives come from
the closed forms, spatial integrals from the same quadrature the solver
uses.  For fixtures built on a semi-wave profile the margins are also
computed in an exact algebraic form (the profile's own equation
substituted), and the discrepancy between the two routes calibrates the
reported tolerance; for the piecewise-linear fixtures the tolerance comes
from a two-resolution refinement of the lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import signal

from .errors import ContractError, ValidationError
from .kernels import AlgebraicTail, Kernel
from .semiwave import SemiWaveSolution
from .solver import Field, ProblemSpec, SolverConfig, TrajectoryLog, run

__all__ = [
    "Lattice",
    "ResidualReport",
    "SuperSemiwave",
    "SubPlateau",
    "SubSemiwave",
    "SubPowerFront",
    "SubTLogTFront",
    "verify_fixture",
    "psi_inequality_check",
    "PsiReport",
    "mass_flux_residual",
    "comparison_order_check",
    "refinement_order",
    "fixture_domination_check",
]


@dataclass(frozen=True)
class Lattice:
    t_values: tuple
    max_nodes: int = 400_000
    dy: float | None = None        # default: kernel scale / 6 (shape fixtures)

    def __post_init__(self):
        if len(self.t_values) == 0:
            raise ContractError("lattice needs at least one time sample")


@dataclass(frozen=True)
class ResidualReport:
    kind: str
    margins: dict                   # per-constraint minimum margin
    worst: dict                     # per-constraint (t, x) of the minimum
    tol: dict
    passed: bool
    notes: tuple = ()
    consistency: float | None = None  # wave fixtures: max |direct - algebraic|

    def to_json(self) -> dict:
        return {"kind": self.kind, "margins": self.margins,
                "worst": {k: list(v) for k, v in self.worst.items()},
                "tol": self.tol, "passed": self.passed,
                "notes": list(self.notes), "consistency": self.consistency}


# ---------------------------------------------------------------------------
# fixture candidates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SuperSemiwave:
    """Upper barrier (1+eps(t)) phi(x - hbar(t)) with hbar ahead of c0 t.

    eps(t) = (t+theta)^-beta and hbar' = c0 (1 + eps); the inequality system
    must hold for beta > 1 and theta, l large.
    """

    wave: SemiWaveSolution
    kernel: Kernel
    reaction: object
    d: float
    mu: float
    theta: float
    beta: float
    l: float
    kind: str = "super-semiwave"
    sense: int = 1
    has_front_check: bool = True

    def __post_init__(self):
        if not self.beta > 1.0:
            raise ValidationError("super-semiwave needs beta > 1")
        if not self.theta >= 1.0:
            raise ValidationError("super-semiwave needs theta >= 1")
        if not self.l > 0.0:
            raise ValidationError("super-semiwave needs l > 0")

    def eps(self, t):
        return (t + self.theta) ** (-self.beta)

    def eps_prime(self, t):
        return -self.beta * (t + self.theta) ** (-self.beta - 1.0)

    def h_front(self, t):
        th = self.theta
        c0 = self.wave.c0
        return c0 * t + self.l + c0 / (1.0 - self.beta) * (
            (t + th) ** (1.0 - self.beta) - th ** (1.0 - self.beta))

    def h_front_prime(self, t):
        return self.wave.c0 * (1.0 + self.eps(t))

    def u_at(self, t, x):
        return (1.0 + self.eps(t)) * self.wave.phi_at(np.asarray(x) - self.h_front(t))

    def u_t_at(self, t, x):
        xi = np.asarray(x) - self.h_front(t)
        phi = self.wave.phi_at(xi)
        dphi = np.interp(xi, self.wave.x, self.wave.phi_prime(),
                         left=0.0, right=0.0)
        return self.eps_prime(t) * phi \
            - (1.0 + self.eps(t)) * self.h_front_prime(t) * dphi

    def ridges(self, t):
        return ()

    def interior_domain(self, t):
        return 0.0, self.h_front(t)

    # exact route: profile equation substituted into the inequality
    def algebraic_interior(self, t, x):
        x = np.asarray(x, dtype=float)
        ep = self.eps(t)
        xi = x - self.h_front(t)
        phi = self.wave.phi_at(xi)
        dphi = np.interp(xi, self.wave.x, self.wave.phi_prime(), left=0.0, right=0.0)
        f = self.reaction.f
        tail = self.kernel.tail_mass(np.maximum(x, 0.0))
        return (self.eps_prime(t) * phi
                - (1.0 + ep) * self.wave.c0 * ep * dphi
                + (1.0 + ep) * f(phi) - f((1.0 + ep) * phi)
                + self.d * (1.0 + ep) * tail * (self.wave.u_star - phi))

    def algebraic_front(self, t):
        ep = self.eps(t)
        missing = self.wave.u_star * self.kernel.tail_mass_integral(self.h_front(t))
        return (1.0 + ep) * (self.wave.speed_defect + self.mu * missing)


@dataclass(frozen=True)
class SubSemiwave:
    """Lower barrier (1-eps(t)) phi(x - hunder(t)) with a logarithmic lag.

    eps(t) = l1/(t+theta), hunder = c0 t + c0 theta - l2 ln((t+theta)/theta);
    the interior inequality is only claimed on (eta0*h, h).
    """

    wave: SemiWaveSolution
    kernel: Kernel
    reaction: object
    d: float
    mu: float
    theta: float
    l1: float
    l2: float
    eta0: float = 0.05
    kind: str = "sub-semiwave"
    sense: int = -1
    has_front_check: bool = True

    def __post_init__(self):
        if not (self.theta >= 1.0 and self.theta > self.l1):
            raise ValidationError("sub-semiwave needs theta >= max(1, l1)")
        if not (self.l1 > 0.0 and self.l2 > 0.0):
            raise ValidationError("sub-semiwave needs positive l1, l2")
        if not 0.0 < self.eta0 < 1.0:
            raise ValidationError("eta0 must sit in (0,1)")

    def eps(self, t):
        return self.l1 / (t + self.theta)

    def eps_prime(self, t):
        return -self.l1 / (t + self.theta) ** 2

    def h_front(self, t):
        c0 = self.wave.c0
        return c0 * t + c0 * self.theta \
            - self.l2 * (math.log(t + self.theta) - math.log(self.theta))

    def h_front_prime(self, t):
        return self.wave.c0 - self.l2 / (t + self.theta)

    def u_at(self, t, x):
        return (1.0 - self.eps(t)) * self.wave.phi_at(np.asarray(x) - self.h_front(t))

    def u_t_at(self, t, x):
        xi = np.asarray(x) - self.h_front(t)
        phi = self.wave.phi_at(xi)
        dphi = np.interp(xi, self.wave.x, self.wave.phi_prime(), left=0.0, right=0.0)
        return -self.eps_prime(t) * phi \
            - (1.0 - self.eps(t)) * self.h_front_prime(t) * dphi

    def ridges(self, t):
        return ()

    def interior_domain(self, t):
        h = self.h_front(t)
        return self.eta0 * h, h

    def algebraic_interior(self, t, x):
        x = np.asarray(x, dtype=float)
        ep = self.eps(t)
        xi = x - self.h_front(t)
        phi = self.wave.phi_at(xi)
        dphi = np.interp(xi, self.wave.x, self.wave.phi_prime(), left=0.0, right=0.0)
        f = self.reaction.f
        tail = self.kernel.tail_mass(np.maximum(x, 0.0))
        delta_p = -self.l2 / (t + self.theta)
        # margin = RHS - u_t, profile equation substituted
        return ((1.0 - ep) * delta_p * dphi
                + self.eps_prime(t) * phi
                + f((1.0 - ep) * phi) - (1.0 - ep) * f(phi)
                - self.d * (1.0 - ep) * tail * (self.wave.u_star - phi))

    def algebraic_front(self, t):
        ep = self.eps(t)
        missing = self.wave.u_star * self.kernel.tail_mass_integral(self.h_front(t))
        exact = (self.l2 - self.l1 * self.wave.c0) / (t + self.theta)
        return exact - self.wave.speed_defect - (1.0 - ep) * self.mu * missing


@dataclass(frozen=True)
class SubPlateau:
    """Piecewise-linear plateau barrier feeding the 1/t interior estimate.

    hunder = 2 eta1 (t+theta); the profile is the plateau u* - rho1/hunder
    up to hunder/2 and a linear ramp beyond.  The front inequality of this
    construction is ordering against the true solution, so only the
    interior PDE inequality and the boundary value are checked here.
    """

    kernel: Kernel
    reaction: object
    d: float
    mu: float
    theta: float
    eta1: float
    rho1: float
    c0: float | None = None
    kind: str = "sub-plateau"
    sense: int = -1
    has_front_check: bool = False

    def __post_init__(self):
        r = self.kernel.support_radius()
        if not math.isfinite(r):
            raise ValidationError("the plateau barrier needs a compactly supported kernel")
        rho = self.reaction.rho
        u_star = self.reaction.u_star
        if rho is None or u_star is None:
            raise ValidationError("the plateau barrier needs a validated reaction "
                                  "with u* and rho")
        band = self.kernel.tail_mass(2.0 * r / 3.0) - self.kernel.tail_mass(r)
        cap = min(rho / 8.0, rho * r / 12.0, self.d * r / 36.0 * band)
        if self.c0 is not None:
            cap = min(cap, self.c0 / 2.0)
        if not 0.0 < self.eta1 < cap:
            raise ValidationError(f"eta1 must sit in (0, {cap:.6g})")
        if not 0.0 < self.rho1 < self.eta1 * self.theta * u_star:
            raise ValidationError("rho1 must sit in (0, eta1*theta*u*)")

    def h_front(self, t):
        return 2.0 * self.eta1 * (t + self.theta)

    def h_front_prime(self, t):
        return 2.0 * self.eta1

    def u_at(self, t, x):
        x = np.asarray(x, dtype=float)
        h = self.h_front(t)
        p = self.reaction.u_star - self.rho1 / h
        ramp = 2.0 * p * (1.0 - x / h)
        return np.clip(np.where(x <= h / 2.0, p, ramp), 0.0, None)

    def u_t_at(self, t, x):
        x = np.asarray(x, dtype=float)
        h = self.h_front(t)
        hp = self.h_front_prime(t)
        p = self.reaction.u_star - self.rho1 / h
        p_t = self.rho1 * hp / h ** 2
        ramp_t = 2.0 * p_t * (1.0 - x / h) + 2.0 * p * x * hp / h ** 2
        return np.where(x <= h / 2.0, p_t, ramp_t)

    def ridges(self, t):
        return (self.h_front(t) / 2.0,)

    def interior_domain(self, t):
        return 0.0, self.h_front(t)


@dataclass(frozen=True)
class SubPowerFront:
    """Accelerated-front barrier h = (l1 t + theta)^(1/(gamma-1)) with a
    half-length ramp, for algebraic kernels with gamma in (1,2)."""

    kernel: Kernel
    reaction: object
    d: float
    mu: float
    theta: float
    l1: float
    eps: float
    kind: str = "sub-power-front"
    sense: int = -1
    has_front_check: bool = True

    def __post_init__(self):
        if not isinstance(self.kernel, AlgebraicTail) or not 1.0 < self.kernel.gamma < 2.0:
            raise ValidationError("the power-front barrier needs an algebraic "
                                  "kernel with gamma in (1,2)")
        if not (0.0 < self.eps and math.sqrt(self.eps) < self.reaction.u_star):
            raise ValidationError("eps must be small and positive")
        if not (self.l1 > 0.0 and self.theta >= 1.0):
            raise ValidationError("need l1 > 0 and theta >= 1")

    @property
    def l_eps(self):
        return self.reaction.u_star - math.sqrt(self.eps)

    def h_front(self, t):
        g = self.kernel.gamma
        return (self.l1 * t + self.theta) ** (1.0 / (g - 1.0))

    def h_front_prime(self, t):
        g = self.kernel.gamma
        return self.l1 / (g - 1.0) * (self.l1 * t + self.theta) ** ((2.0 - g) / (g - 1.0))

    def u_at(self, t, x):
        x = np.asarray(x, dtype=float)
        h = self.h_front(t)
        return self.l_eps * np.clip(np.minimum(1.0, 2.0 * (h - x) / h), 0.0, None)

    def u_t_at(self, t, x):
        x = np.asarray(x, dtype=float)
        h = self.h_front(t)
        hp = self.h_front_prime(t)
        return np.where(x <= h / 2.0, 0.0, 2.0 * self.l_eps * x * hp / h ** 2)

    def ridges(self, t):
        return (self.h_front(t) / 2.0,)

    def interior_domain(self, t):
        return 0.0, self.h_front(t)


@dataclass(frozen=True)
class SubTLogTFront:
    """Accelerated-front barrier h = l1 (t+theta) ln(t+theta) with a ramp of
    width (t+theta)^alpha, for algebraic kernels with gamma = 2."""

    kernel: Kernel
    reaction: object
    d: float
    mu: float
    theta: float
    l1: float
    alpha: float
    eps: float
    kind: str = "sub-tlogt-front"
    sense: int = -1
    has_front_check: bool = True

    def __post_init__(self):
        if not isinstance(self.kernel, AlgebraicTail) or abs(self.kernel.gamma - 2.0) > 1e-12:
            raise ValidationError("the t log t barrier needs an algebraic kernel "
                                  "with gamma = 2")
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError("alpha must sit in (0,1)")
        if not (0.0 < self.eps and math.sqrt(self.eps) < self.reaction.u_star):
            raise ValidationError("eps must be small and positive")
        if not (self.l1 > 0.0 and self.theta >= 1.0):
            raise ValidationError("need l1 > 0 and theta >= 1")
        if self.h_front(0.0) <= 2.0 * self.ramp_width(0.0):
            raise ValidationError("theta too small: the ramp swallows the front")

    @property
    def l_eps(self):
        return self.reaction.u_star - math.sqrt(self.eps)

    def ramp_width(self, t):
        return (t + self.theta) ** self.alpha

    def h_front(self, t):
        return self.l1 * (t + self.theta) * math.log(t + self.theta)

    def h_front_prime(self, t):
        return self.l1 * (math.log(t + self.theta) + 1.0)

    def u_at(self, t, x):
        x = np.asarray(x, dtype=float)
        h = self.h_front(t)
        w = self.ramp_width(t)
        return self.l_eps * np.clip(np.minimum(1.0, (h - x) / w), 0.0, None)

    def u_t_at(self, t, x):
        x = np.asarray(x, dtype=float)
        h = self.h_front(t)
        w = self.ramp_width(t)
        hp = self.h_front_prime(t)
        ramp_t = self.l_eps * (hp / w
                               - self.alpha * (h - x) / ((t + self.theta) * w))
        return np.where(x <= h - w, 0.0, ramp_t)

    def ridges(self, t):
        return (self.h_front(t) - self.ramp_width(t),)

    def interior_domain(self, t):
        return 0.0, self.h_front(t)


_WAVE_KINDS = ("super-semiwave", "sub-semiwave")


# ---------------------------------------------------------------------------
# lattice evaluation
# ---------------------------------------------------------------------------


def _grid_for(fixture, t, lattice: Lattice, halve: bool = False):
    """Quadrature grid on [0, h(t)].  Wave fixtures align to the profile grid
    (shifted by the front) so the profile's own equation cancels exactly;
    shape fixtures use a uniform grid with the scale of the kernel core."""
    h = fixture.h_front(t)
    if fixture.kind in _WAVE_KINDS:
        dxp = fixture.wave.dx
        n = int(math.floor(h / dxp + 1e-12))
        y = h - dxp * np.arange(n, -1, -1)
        return y, dxp
    dy0 = lattice.dy if lattice.dy is not None else fixture.kernel.quadrature_scale() / 6.0
    if fixture.kind == "sub-tlogt-front":
        dy0 = min(dy0, fixture.ramp_width(t) / 8.0)
    if halve:
        dy0 /= 2.0
    nq = min(max(64, int(math.ceil(h / dy0))), lattice.max_nodes)
    dy = h / nq
    return dy * np.arange(nq + 1), dy


def _conv_on_grid(fixture, t, y, dy):
    """int_0^h J(x - z) u(t, z) dz at every node of the grid."""
    kernel = fixture.kernel
    vals = np.asarray(fixture.u_at(t, y), dtype=float)
    w = np.ones(len(y))
    w[0] = w[-1] = 0.5
    r = kernel.support_radius()
    span = y[-1] - y[0]
    reach = r if math.isfinite(r) else span
    m = min(int(math.ceil(reach / dy)) + 1, len(y) - 1)
    conv = signal.convolve(vals * w, kernel.taps(dy, m), mode="same",
                           method="auto") * dy
    if y[0] > 1e-12:
        # strip [0, y0) not covered by nodes: trapezoid of the closed form
        u0 = float(fixture.u_at(t, 0.0))
        u1 = float(fixture.u_at(t, y[0]))
        area = y[0] * 0.5 * (u0 + u1)
        conv += area * kernel.evaluate(y - 0.5 * y[0])
    return vals, conv


def _flux_quadrature(fixture, t, y, dy):
    kernel = fixture.kernel
    h = fixture.h_front(t)
    vals = np.asarray(fixture.u_at(t, y), dtype=float)
    w = np.ones(len(y))
    w[0] = w[-1] = 0.5
    tails = kernel.tail_mass(np.maximum(h - y, 0.0))
    flux = float(np.dot(tails, vals * w)) * dy
    if y[0] > 1e-12:
        u0 = float(fixture.u_at(t, 0.0))
        u1 = float(fixture.u_at(t, y[0]))
        flux += y[0] * 0.5 * (u0 + u1) * float(kernel.tail_mass(h - 0.5 * y[0]))
    return flux


def _interior_margins(fixture, t, lattice, halve=False):
    y, dy = _grid_for(fixture, t, lattice, halve=halve)
    vals, conv = _conv_on_grid(fixture, t, y, dy)
    h = fixture.h_front(t)
    j = fixture.kernel.halfline_mass(np.maximum(y, 0.0))
    rhs = fixture.d * conv - fixture.d * j * vals + fixture.reaction.f(vals)
    ut = np.asarray(fixture.u_t_at(t, y), dtype=float)
    margin = fixture.sense * (ut - rhs)
    lo, hi = fixture.interior_domain(t)
    keep = (y >= lo - 1e-12) & (y < hi - 1e-12)
    dropped = 0
    for ridge in fixture.ridges(t):
        near = np.abs(y - ridge) <= 0.75 * dy
        dropped += int(np.sum(near & keep))
        keep &= ~near
    return y[keep], margin[keep], dy, dropped


def verify_fixture(fixture, lattice: Lattice,
                   reference: tuple | None = None) -> ResidualReport:
    """Pointwise margins of the fixture's inequality system on the lattice.

    Margins are oriented so that nonnegative means the inequality holds.
    ``reference`` optionally supplies (Field, h) to check the initial
    ordering against a simulated state at the fixture's t = 0.
    """
    margins = {"interior": math.inf, "front": math.inf, "boundary": math.inf}
    worst = {k: (math.nan, math.nan) for k in margins}
    notes = []
    consistency = 0.0
    shape_noise = 0.0

    for t in lattice.t_values:
        ys, m_int, dy, dropped = _interior_margins(fixture, t, lattice)
        if dropped:
            notes.append(f"t={t:g}: dropped {dropped} lattice points at the "
                         "non-smooth ridge")
        if len(m_int):
            i = int(np.argmin(m_int))
            if m_int[i] < margins["interior"]:
                margins["interior"] = float(m_int[i])
                worst["interior"] = (float(t), float(ys[i]))
        if fixture.kind in _WAVE_KINDS:
            alg = fixture.algebraic_interior(t, ys)
            consistency = max(consistency, float(np.max(np.abs(alg - m_int))))
        else:
            ys2, m2, _, _ = _interior_margins(fixture, t, lattice, halve=True)
            ref = np.interp(ys, ys2, m2)
            shape_noise = max(shape_noise, float(np.max(np.abs(ref - m_int))))

        h = fixture.h_front(t)
        if fixture.has_front_check:
            flux = _flux_quadrature(fixture, t, *_grid_for(fixture, t, lattice)[0:2])
            m_front = fixture.sense * (fixture.h_front_prime(t) - fixture.mu * flux)
            if fixture.kind in _WAVE_KINDS:
                consistency = max(consistency,
                                  abs(m_front - fixture.algebraic_front(t)))
            if m_front < margins["front"]:
                margins["front"] = float(m_front)
                worst["front"] = (float(t), float(h))
        m_bnd = fixture.sense * float(fixture.u_at(t, h))
        if m_bnd < margins["boundary"]:
            margins["boundary"] = m_bnd
            worst["boundary"] = (float(t), float(h))

    if reference is not None:
        ref_field, ref_h = reference
        t0 = lattice.t_values[0]
        vals = fixture.u_at(t0, ref_field.x)
        gap = fixture.sense * (vals - ref_field.values)
        margins["initial"] = float(np.min(gap))
        worst["initial"] = (float(t0), float(ref_field.x[int(np.argmin(gap))]))
        margins["initial_front"] = fixture.sense * (fixture.h_front(t0) - ref_h)
        worst["initial_front"] = (float(t0), float(ref_h))

    if fixture.kind in _WAVE_KINDS:
        base = 10.0 * fixture.wave.residual + 10.0 * consistency
        tol = {"interior": base,
               "front": 10.0 * fixture.wave.speed_defect + 10.0 * consistency,
               "boundary": 1e-12}
    else:
        tol = {"interior": 10.0 * shape_noise + 1e-12,
               "front": 10.0 * shape_noise + 1e-12,
               "boundary": 1e-12}
    for k in ("initial", "initial_front"):
        if k in margins:
            tol[k] = 1e-9

    if not fixture.has_front_check:
        margins.pop("front")
        worst.pop("front")
        tol.pop("front")
    passed = all(margins[k] >= -tol[k] for k in margins)
    return ResidualReport(kind=fixture.kind, margins=margins, worst=worst,
                          tol=tol, passed=passed, notes=tuple(notes),
                          consistency=consistency if fixture.kind in _WAVE_KINDS else shape_noise)


def margin_field_csv(fixture, lattice: Lattice, path):
    """Dump the interior margin field as (t, x, margin) rows for plotting."""
    with open(path, "w") as fh:
        fh.write("t,x,margin\n")
        for t in lattice.t_values:
            ys, margins, _, _ = _interior_margins(fixture, t, lattice)
            for x, m in zip(ys, margins):
                fh.write(f"{t:.17g},{x:.17g},{m:.17g}\n")


# ---------------------------------------------------------------------------
# cutoff-function inequality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PsiReport:
    kappa_eps: float
    worst_margin: float
    eps: float
    kappa1: float
    kappa2: float

    def to_json(self) -> dict:
        return {"kappa_eps": self.kappa_eps, "worst_margin": self.worst_margin,
                "eps": self.eps, "kappa1": self.kappa1, "kappa2": self.kappa2}


def psi_inequality_check(P: Kernel, kappa1: float, kappa2: float, eps: float,
                         dx: float | None = None) -> PsiReport:
    """Smallest kappa so that int_0^k2 P(x-y) psi(y) dy >= (1-eps) psi(x)
    holds on [kappa, kappa2], with psi the plateau cutoff of width kappa1.

    Found by a doubling search over [grid step, min(kappa1, kappa2-kappa1)]
    followed by a scan refinement at grid resolution.
    """
    if not (kappa2 > kappa1 > 0.0):
        raise ContractError("need kappa2 > kappa1 > 0")
    if not 0.0 < eps < 1.0:
        raise ContractError("eps must sit in (0,1)")
    dx = dx if dx is not None else min(kappa1 / 64.0, P.quadrature_scale() / 8.0)
    n = int(math.ceil(kappa2 / dx))
    dx = kappa2 / n
    x = dx * np.arange(n + 1)
    psi = np.minimum(1.0, (kappa2 - np.abs(x)) / kappa1)
    w = np.ones(n + 1)
    w[0] = w[-1] = 0.5
    r = P.support_radius()
    reach = r if math.isfinite(r) else kappa2
    m = min(int(math.ceil(reach / dx)) + 1, n)
    conv = signal.convolve(psi * w, P.taps(dx, m), mode="same", method="auto") * dx
    margin = conv - (1.0 - eps) * psi

    bad = margin < 0.0
    cap = min(kappa1, kappa2 - kappa1)
    k = dx
    while k < cap and np.any(bad & (x >= k)):
        k *= 2.0
    # refine down to grid resolution
    viol = np.nonzero(bad)[0]
    if len(viol) == 0:
        kappa_eps = 0.0
    else:
        kappa_eps = float(x[viol[-1]] + dx)
    sel = x >= kappa_eps - 1e-12
    return PsiReport(kappa_eps=kappa_eps,
                     worst_margin=float(np.min(margin[sel])),
                     eps=eps, kappa1=kappa1, kappa2=kappa2)


# ---------------------------------------------------------------------------
# structural oracles
# ---------------------------------------------------------------------------


def mass_flux_residual(log: TrajectoryLog, spec: ProblemSpec) -> float:
    """max_k |Q(t_k) - Q(0) - int_0^{t_k} int f(u)| with Q = mass + (d/mu) h.

    Differentiating the model in time and integrating in x kills the
    symmetric convolution part and leaves the front flux, so Q drifts only
    by the reaction integral; the discretization residual decays under
    refinement.
    """
    if spec.variant != "halfline-fb":
        raise ContractError("the mass-flux identity is a half-line-front statement")
    t = np.asarray(log.t, dtype=float)
    needed = {"mass": log.mass, "h": log.h}
    for name, col in needed.items():
        if len(col) != len(t):
            raise ContractError(f"log is missing the {name} column")
    if len(log.rint) != len(t):
        raise ContractError("log lacks the reaction-integral series needed "
                            "for f != 0 runs; rerun in-process")
    Q = np.asarray(log.mass) + (spec.d / spec.mu) * np.asarray(log.h)
    rint = np.asarray(log.rint)
    F = np.concatenate([[0.0], np.cumsum(0.5 * (rint[1:] + rint[:-1]) * np.diff(t))])
    return float(np.max(np.abs(Q - Q[0] - F)))


@dataclass(frozen=True)
class ComparisonReport:
    passed: bool
    max_u_violation: float
    max_h_violation: float
    checked_times: int


def comparison_order_check(spec_a: ProblemSpec, spec_b: ProblemSpec,
                           cfg: SolverConfig, tol: float = 1e-8) -> ComparisonReport:
    """Ordered initial data must stay ordered: u_a <= u_b and h_a <= h_b."""
    same = (spec_a.variant == spec_b.variant and spec_a.kernel == spec_b.kernel
            and spec_a.d == spec_b.d and spec_a.mu == spec_b.mu
            and spec_a.h0 == spec_b.h0
            and spec_a.reaction.to_json() == spec_b.reaction.to_json())
    if not same:
        raise ContractError("specs must agree except for the initial datum")
    probe = np.linspace(0.0, spec_a.h0, 513)
    ua = np.asarray(spec_a.initial_datum()(probe))
    ub = np.asarray(spec_b.initial_datum()(probe))
    if np.any(ua > ub + 1e-12):
        raise ContractError("initial data are not ordered: u0_a must lie below u0_b")
    if cfg.snapshot_stride <= 0:
        cfg = replace(cfg, snapshot_stride=1)
    log_a = run(spec_a, cfg)
    log_b = run(spec_b, cfg)
    max_u = 0.0
    n_checked = 0
    for (ta, fa), (tb, fb) in zip(log_a.snapshots, log_b.snapshots):
        if abs(ta - tb) > 1e-9:
            raise ContractError("snapshot cadences diverged between the runs")
        max_u = max(max_u, float(np.max(fa.values - fb.at(fa.x))))
        n_checked += 1
    max_h = float(np.max(np.asarray(log_a.h) - np.asarray(log_b.h)))
    return ComparisonReport(passed=(max_u <= tol and max_h <= tol),
                            max_u_violation=max_u, max_h_violation=max_h,
                            checked_times=n_checked)


@dataclass(frozen=True)
class RefinementReport:
    h_values: tuple
    diffs: tuple
    orders: tuple
    order: float | None
    inconclusive: bool


def refinement_order(spec: ProblemSpec, cfg: SolverConfig,
                     levels: int = 3) -> RefinementReport:
    """Observed convergence order of h(t_end) under joint (dx, dt) halving."""
    if levels < 3:
        raise ContractError("refinement_order needs at least 3 levels")
    if cfg.dt is None:
        raise ContractError("refinement_order needs an explicit base dt")
    hs = []
    for k in range(levels):
        lcfg = replace(cfg, dx=cfg.dx / 2 ** k, dt=cfg.dt / 2 ** k)
        hs.append(run(spec, lcfg).h[-1])
    diffs = tuple(hs[i] - hs[i + 1] for i in range(len(hs) - 1))
    if any(d == 0.0 for d in diffs) or len({d > 0 for d in diffs}) != 1:
        return RefinementReport(tuple(hs), diffs, (), None, True)
    orders = tuple(math.log2(abs(diffs[i] / diffs[i + 1]))
                   for i in range(len(diffs) - 1))
    return RefinementReport(tuple(hs), diffs, orders, float(np.median(orders)), False)


def fixture_domination_check(fixture, cfg: SolverConfig, t_end: float,
                             tol: float = 5e-3) -> dict:
    """Soundness of a sub-fixture against the solver: a run started at the
    barrier stays above it (the fitted lag T is zero for an equal start)."""
    if fixture.sense != -1:
        raise ContractError("domination checks apply to lower barriers")
    h0 = fixture.h_front(0.0)
    spec = ProblemSpec(variant="halfline-fb", kernel=fixture.kernel,
                       reaction=fixture.reaction, d=fixture.d, h0=h0,
                       mu=fixture.mu, u0=lambda x: fixture.u_at(0.0, x))
    run_cfg = replace(cfg, t_end=t_end,
                      snapshot_stride=max(1, cfg.snapshot_stride))
    log = run(spec, run_cfg)
    worst_u = 0.0
    worst_h = 0.0
    for t, snap in log.snapshots:
        hb = fixture.h_front(t)
        sel = snap.x <= min(hb, snap.x[-1])
        gap = fixture.u_at(t, snap.x[sel]) - snap.values[sel]
        worst_u = max(worst_u, float(np.max(gap)))
    th = np.asarray(log.t)
    hh = np.asarray(log.h)
    worst_h = float(np.max([fixture.h_front(t) - h for t, h in zip(th, hh)]))
    return {"passed": worst_u <= tol and worst_h <= tol,
            "max_u_violation": worst_u, "max_h_violation": worst_h}
