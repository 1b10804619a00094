"""Explicit time integration of the five nonlocal model variants.

Variants
--------
halfline-fb   moving right front h(t), fixed wall at x = 0, sink d*j(x)*u
twosided-fb   moving fronts g(t) < 0 < h(t), sink d*u
cauchy-full   whole line, no fronts (support tracked for logging)
cauchy-half   half line x >= 0, no fronts, sink d*j(x)*u
fixed-domain  frozen domain [0, h0], sink d*j(x)*u

The field lives on a uniform grid that grows with the front.  Fronts are
continuous reals, never grid-snapped: the last quadrature cell [x_m, h]
enters every integral with its exact triangular weight, and the kernel is
sampled through cell averages of its closed-form cumulative tail, so a
constant field convolves to itself without quadrature bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import signal

from .errors import ContractError, ResourceError, ValidationError
from .kernels import Kernel

__all__ = [
    "VARIANTS",
    "Field",
    "ProblemSpec",
    "SolverConfig",
    "State",
    "TrajectoryLog",
    "make_plateau",
    "stability_budget",
    "nonlocal_operator",
    "boundary_flux",
    "step",
    "run",
    "classify",
]

VARIANTS = ("halfline-fb", "twosided-fb", "cauchy-full", "cauchy-half", "fixed-domain")
_FRONT_VARIANTS = ("halfline-fb", "twosided-fb")
_HALFLINE_SINK = ("halfline-fb", "cauchy-half", "fixed-domain")


@dataclass(frozen=True)
class Field:
    """A sampled profile on a uniform grid."""

    x0: float
    dx: float
    values: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(len(self.values))

    def at(self, xq):
        """Linear interpolation, zero outside the sampled window."""
        return np.interp(xq, self.x, self.values, left=0.0, right=0.0)


def make_plateau(h0: float, m: float = 1.0, ramp: float = 1.0) -> Callable:
    """Default initial datum m * min(1, (h0 - |x|)/ramp): plateau with a linear edge."""
    if not (m > 0.0 and ramp > 0.0):
        raise ValidationError("plateau needs m > 0 and ramp > 0")

    def u0(x):
        x = np.asarray(x, dtype=float)
        out = m * np.clip((h0 - np.abs(x)) / ramp, 0.0, 1.0)
        return out if out.ndim else float(out)

    return u0


@dataclass(frozen=True)
class ProblemSpec:
    variant: str
    kernel: Kernel
    reaction: object              # Reaction; only f, f_prime, u_star are used
    d: float
    h0: float
    mu: float = 1.0
    u0: Callable | None = None    # defaults to a u*-high plateau

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValidationError(f"unknown variant {self.variant!r}; pick one of {VARIANTS}")
        if not self.d > 0.0:
            raise ValidationError("diffusion coefficient d must be positive")
        if not self.h0 > 0.0:
            raise ValidationError("initial front h0 must be positive")
        if self.variant in _FRONT_VARIANTS and not self.mu > 0.0:
            raise ValidationError("front coefficient mu must be positive")

    def initial_datum(self) -> Callable:
        if self.u0 is not None:
            return self.u0
        m = self.reaction.u_star if self.reaction.u_star else 1.0
        return make_plateau(self.h0, m=m)

    def u_cap(self) -> float:
        """Maximum-principle ceiling max(u*, sup u0)."""
        u0 = self.initial_datum()
        xs = np.linspace(-self.h0, self.h0, 513)
        sup0 = float(np.max(u0(xs)))
        return max(self.reaction.u_star or 0.0, sup0)


@dataclass(frozen=True)
class SolverConfig:
    dx: float = 0.05
    dt: float | None = None          # defaults to half the stability budget
    t_end: float = 10.0
    log_every: float | None = None   # defaults to t_end/200, at least dt
    snapshot_stride: int = 0         # keep every k-th checkpoint field; 0 = none
    headroom: float = 4.0            # interaction lengths kept ahead of the front
    max_nodes: int = 4_000_000
    scheme: str = "euler"            # or "rk2" (midpoint)
    front_tol: float = 1e-9          # relative support threshold for Cauchy fronts

    def __post_init__(self):
        if not self.dx > 0.0:
            raise ValidationError("dx must be positive")
        if self.t_end < 0.0:
            raise ValidationError("t_end must be nonnegative")
        if self.scheme not in ("euler", "rk2"):
            raise ValidationError("scheme must be 'euler' or 'rk2'")


@dataclass
class State:
    t: float
    x0: float
    dx: float
    u: np.ndarray
    h: float
    g: float = -math.inf      # left front; only meaningful for twosided-fb

    def copy(self) -> "State":
        return State(self.t, self.x0, self.dx, self.u.copy(), self.h, self.g)

    def as_field(self) -> Field:
        return Field(self.x0, self.dx, self.u.copy())


@dataclass
class TrajectoryLog:
    t: list = field(default_factory=list)
    h: list = field(default_factory=list)
    g: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    sup_u: list = field(default_factory=list)
    flux: list = field(default_factory=list)
    rint: list = field(default_factory=list)   # int f(u) dx, used by mass-flux audit
    snapshots: list = field(default_factory=list)  # (t, Field)
    final_state: State | None = None
    meta: dict = field(default_factory=dict)
    truncated: bool = False

    def arrays(self):
        return {k: np.asarray(getattr(self, k), dtype=float)
                for k in ("t", "h", "g", "mass", "sup_u", "flux")}

    def to_csv(self, path):
        cols = ("t", "h", "g", "mass", "sup_u", "flux")
        rows = zip(*(getattr(self, c) for c in cols))
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for row in rows:
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "TrajectoryLog":
        data = np.genfromtxt(path, delimiter=",", names=True)
        data = np.atleast_1d(data)
        log = cls()
        for name in ("t", "h", "g", "mass", "sup_u", "flux"):
            getattr(log, name).extend(float(v) for v in data[name])
        return log


def stability_budget(spec: ProblemSpec) -> float:
    """Explicit-step budget 0.5 / (2d + max|f'| on [0, 2 max(u*, sup u0)])."""
    kf = spec.reaction.max_abs_fprime(cap=2.0 * spec.u_cap())
    return 0.5 / (2.0 * spec.d + kf)


# ---------------------------------------------------------------------------
# quadrature helpers shared by the engine and the point operators
# ---------------------------------------------------------------------------


def _front_cell(x0, dx, h):
    """Index of the last node at or left of h, plus the partial-cell geometry."""
    i = int(math.floor((h - x0) / dx + 1e-12))
    x_last = x0 + i * dx
    if x_last > h:
        i -= 1
        x_last -= dx
    s = h - x_last
    return i, x_last, s


def _left_cell(x0, dx, g):
    i = int(math.ceil((g - x0) / dx - 1e-12))
    x_first = x0 + i * dx
    if x_first < g:
        i += 1
        x_first += dx
    s = x_first - g
    return i, x_first, s


class _Engine:
    """Owns the grid, taps and weights of one run; mutates one State."""

    def __init__(self, spec: ProblemSpec, cfg: SolverConfig):
        self.spec = spec
        self.cfg = cfg
        self.kernel = spec.kernel
        self.dx = cfg.dx
        budget = stability_budget(spec)
        self.dt = cfg.dt if cfg.dt is not None else 0.5 * budget
        if self.dt > budget * (1.0 + 1e-12):
            raise ValidationError(
                f"dt = {self.dt} exceeds the stability budget {budget:.6g}")
        self.ell = min(self.kernel.interaction_length(), 25.0)
        self.u_cap = spec.u_cap()
        self.front_floor = cfg.front_tol * max(self.u_cap, 1e-300)
        if spec.variant == "fixed-domain":
            ratio = spec.h0 / self.dx
            if abs(ratio - round(ratio)) > 1e-9:
                raise ValidationError("fixed-domain runs need h0 to be a grid multiple of dx")
        self._init_grid()

    # -- grid ---------------------------------------------------------------

    def _init_grid(self):
        spec, dx = self.spec, self.dx
        pad = max(self.cfg.headroom * self.ell, 10 * dx)
        if spec.variant == "fixed-domain":
            lo, hi = 0.0, spec.h0
        elif spec.variant in ("halfline-fb", "cauchy-half"):
            lo, hi = 0.0, spec.h0 + pad
        else:
            lo, hi = -(spec.h0 + pad), spec.h0 + pad
        n = int(round((hi - lo) / dx)) + 1
        x0 = lo
        x = x0 + dx * np.arange(n)
        u0 = spec.initial_datum()
        u = np.asarray(u0(x), dtype=float)
        if np.any(u < -1e-12):
            raise ValidationError("initial datum must be nonnegative")
        u = np.clip(u, 0.0, None)
        if not np.max(u) > 0.0:
            raise ValidationError("initial datum must be positive somewhere inside")
        edge = float(u0(spec.h0))
        if abs(edge) > 1e-9 * max(1.0, np.max(u)) and spec.variant != "fixed-domain":
            raise ValidationError("initial datum must vanish at the moving front")
        u[x > spec.h0 + 1e-12] = 0.0
        if spec.variant in ("halfline-fb", "twosided-fb", "cauchy-full"):
            u[x < -spec.h0 - 1e-12] = 0.0
        g0 = -spec.h0 if spec.variant == "twosided-fb" else -math.inf
        self.state = State(t=0.0, x0=x0, dx=dx, u=u, h=spec.h0, g=g0)
        self._refresh_taps()

    def _refresh_taps(self):
        n = len(self.state.u)
        r = self.kernel.support_radius()
        reach = r if math.isfinite(r) else n * self.dx
        m = min(int(math.ceil(reach / self.dx)) + 1, n - 1)
        self.taps = self.kernel.taps(self.dx, m)
        x = self.state.x0 + self.dx * np.arange(n)
        if self.spec.variant in _HALFLINE_SINK:
            self.sink = self.spec.d * self.kernel.halfline_mass(np.maximum(x, 0.0))
        else:
            self.sink = np.full(n, self.spec.d)

    def _grow(self, need_left: float, need_right: float):
        st = self.state
        n = len(st.u)
        right_edge = st.x0 + (n - 1) * self.dx
        chunk = max(self.cfg.headroom * self.ell, 0.25 * (right_edge - st.x0), 50 * self.dx)
        add_r = 0
        if need_right > right_edge - 2 * self.ell:
            add_r = int(math.ceil((need_right + chunk - right_edge) / self.dx))
        add_l = 0
        if need_left < st.x0 + 2 * self.ell and self.spec.variant in ("twosided-fb", "cauchy-full"):
            add_l = int(math.ceil((st.x0 - (need_left - chunk)) / self.dx))
        if add_r == 0 and add_l == 0:
            return
        if n + add_l + add_r > self.cfg.max_nodes:
            raise ResourceError("computational window exceeded max_nodes",
                                partial=self.log)
        u = np.zeros(n + add_l + add_r)
        u[add_l:add_l + n] = st.u
        st.u = u
        st.x0 -= add_l * self.dx
        self._refresh_taps()

    # -- quadrature ----------------------------------------------------------

    def _active_window(self, st: State):
        """Active integration bounds (lo, hi) of the current variant."""
        v = self.spec.variant
        n = len(st.u)
        right = st.x0 + (n - 1) * self.dx
        if v == "halfline-fb":
            return 0.0, st.h
        if v == "twosided-fb":
            return st.g, st.h
        if v == "fixed-domain":
            return 0.0, self.spec.h0
        return st.x0, right

    def _pieces(self, st: State):
        """Trapezoid weights over active nodes plus the partial front cells."""
        lo, hi = self._active_window(st)
        n = len(st.u)
        i_hi, x_hi, s_hi = _front_cell(st.x0, self.dx, min(hi, st.x0 + (n - 1) * self.dx))
        i_lo, x_lo, s_lo = _left_cell(st.x0, self.dx, max(lo, st.x0))
        w = np.zeros(n)
        w[i_lo:i_hi + 1] = 1.0
        w[i_lo] = 0.5
        w[i_hi] = 0.5 if i_hi > i_lo else 0.0
        cells = []
        if self.spec.variant in _FRONT_VARIANTS and s_hi > 0.0 and i_hi >= 0:
            # triangular cell [x_hi, h]: u falls linearly to 0 at the front
            cells.append((s_hi * st.u[i_hi] / 2.0, x_hi + s_hi / 3.0))
        if self.spec.variant == "twosided-fb" and s_lo > 0.0:
            cells.append((s_lo * st.u[i_lo] / 2.0, x_lo - s_lo / 3.0))
        return w, cells, (i_lo, i_hi)

    def _convolve(self, wu: np.ndarray, cells) -> np.ndarray:
        conv = signal.convolve(wu, self.taps, mode="same", method="auto") * self.dx
        if cells:
            x = self.state.x0 + self.dx * np.arange(len(wu))
            for area, yc in cells:
                if area != 0.0:
                    conv += area * self.kernel.evaluate(x - yc)
        return conv

    def _rhs(self, st: State):
        spec = self.spec
        w, cells, (i_lo, i_hi) = self._pieces(st)
        wu = st.u * w
        conv = self._convolve(wu, cells)
        rate = spec.d * conv - self.sink * st.u + spec.reaction.f(st.u)
        rate[:i_lo] = 0.0
        rate[i_hi + 1:] = 0.0
        flux_r = flux_l = 0.0
        if spec.variant in _FRONT_VARIANTS:
            x = st.x0 + self.dx * np.arange(len(st.u))
            sl = slice(i_lo, i_hi + 1)
            tails = self.kernel.tail_mass(np.maximum(st.h - x[sl], 0.0))
            flux_r = float(np.dot(tails, wu[sl])) * self.dx
            for area, yc in cells:
                flux_r += area * float(self.kernel.tail_mass(max(st.h - yc, 0.0)))
            if spec.variant == "twosided-fb":
                tails_l = self.kernel.tail_mass(np.maximum(x[sl] - st.g, 0.0))
                flux_l = float(np.dot(tails_l, wu[sl])) * self.dx
                for area, yc in cells:
                    flux_l += area * float(self.kernel.tail_mass(max(yc - st.g, 0.0)))
        return rate, flux_r, flux_l

    def _apply(self, st: State, rate, flux_r, flux_l, dt) -> State:
        spec = self.spec
        u = st.u + dt * rate
        h = st.h + dt * spec.mu * flux_r if spec.variant in _FRONT_VARIANTS else st.h
        g = st.g - dt * spec.mu * flux_l if spec.variant == "twosided-fb" else st.g
        np.clip(u, 0.0, None, out=u)
        if spec.variant in _FRONT_VARIANTS:
            x = st.x0 + self.dx * np.arange(len(u))
            u[x >= h] = 0.0
            if spec.variant == "twosided-fb":
                u[x <= g] = 0.0
            else:
                u[x < 0.0] = 0.0
        return State(t=st.t + dt, x0=st.x0, dx=st.dx, u=u, h=h, g=g)

    def step_once(self):
        st = self.state
        rate, fr, fl = self._rhs(st)
        if self.cfg.scheme == "rk2":
            mid = self._apply(st, rate, fr, fl, 0.5 * self.dt)
            rate2, fr2, fl2 = self._rhs(mid)
            new = self._apply(st, rate2, fr2, fl2, self.dt)
        else:
            new = self._apply(st, rate, fr, fl, self.dt)
        self.state = new

    # -- logging --------------------------------------------------------------

    def _effective_fronts(self, st: State):
        """Rightmost/leftmost positions carrying visible field (Cauchy logging)."""
        idx = np.nonzero(st.u > self.front_floor)[0]
        if len(idx) == 0:
            return st.x0, st.x0
        x = st.x0 + self.dx * np.arange(len(st.u))
        return x[idx[0]], x[idx[-1]]

    def observables(self, st: State):
        w, cells, (i_lo, i_hi) = self._pieces(st)
        wu = st.u * w
        mass = float(np.sum(wu)) * self.dx + sum(area for area, _ in cells)
        rint = float(np.sum(self.spec.reaction.f(st.u) * w)) * self.dx
        for area, yc in cells:
            # midpoint value of f on the triangular end cell, u falling to 0
            i = i_hi if yc >= st.x0 + (i_lo + i_hi) * self.dx / 2.0 else i_lo
            width = 2.0 * area / st.u[i] if st.u[i] > 0.0 else 0.0
            rint += width * float(self.spec.reaction.f(st.u[i] / 2.0))
        sup = float(np.max(st.u)) if len(st.u) else 0.0
        fr = 0.0
        if self.spec.variant in _FRONT_VARIANTS:
            _, fr, _ = self._rhs(st)
        if self.spec.variant in _FRONT_VARIANTS or self.spec.variant == "fixed-domain":
            h_log, g_log = st.h, st.g
        else:
            _, h_log = self._effective_fronts(st)
            g_log = -math.inf
        return h_log, g_log, mass, sup, fr, rint


def run(spec: ProblemSpec, cfg: SolverConfig) -> TrajectoryLog:
    """Integrate to t_end, growing the window ahead of the active front."""
    eng = _Engine(spec, cfg)
    log = TrajectoryLog()
    eng.log = log
    log.meta = {
        "variant": spec.variant, "d": spec.d, "mu": spec.mu, "h0": spec.h0,
        "dx": eng.dx, "dt": eng.dt, "t_end": cfg.t_end,
        "u_star": spec.reaction.u_star, "ell": eng.ell,
        "kernel": spec.kernel.to_json(), "reaction": spec.reaction.to_json(),
    }
    n_steps = int(round(cfg.t_end / eng.dt)) \
        if abs(round(cfg.t_end / eng.dt) * eng.dt - cfg.t_end) < 1e-9 * max(cfg.t_end, 1.0) \
        else int(math.ceil(cfg.t_end / eng.dt - 1e-12))
    stride = 1
    if n_steps > 0:
        log_every = cfg.log_every if cfg.log_every is not None else max(cfg.t_end / 200.0, eng.dt)
        stride = max(1, int(round(log_every / eng.dt)))

    def checkpoint(k):
        st = eng.state
        h_log, g_log, mass, sup, fr, rint = eng.observables(st)
        log.t.append(st.t)
        log.h.append(h_log)
        log.g.append(g_log)
        log.mass.append(mass)
        log.sup_u.append(sup)
        log.flux.append(fr)
        log.rint.append(rint)
        n_checks = len(log.t) - 1
        if cfg.snapshot_stride > 0 and n_checks % cfg.snapshot_stride == 0:
            log.snapshots.append((st.t, st.as_field()))

    checkpoint(0)
    try:
        for k in range(1, n_steps + 1):
            st = eng.state
            if spec.variant in _FRONT_VARIANTS:
                need_r, need_l = st.h, st.g if spec.variant == "twosided-fb" else 0.0
            elif spec.variant == "fixed-domain":
                need_r, need_l = spec.h0, 0.0
            else:
                need_l, need_r = eng._effective_fronts(st)
            eng._grow(need_l, need_r)
            eng.step_once()
            if k % stride == 0 or k == n_steps:
                checkpoint(k)
    except ResourceError:
        log.truncated = True
        log.final_state = eng.state.copy()
        raise ResourceError("run exceeded its window cap", partial=log)
    log.final_state = eng.state.copy()
    return log


def step(spec: ProblemSpec, cfg: SolverConfig, state: State) -> State:
    """One explicit update of a caller-held state (diagnostic surface)."""
    eng = _Engine(spec, cfg)
    eng.state = state.copy()
    eng._refresh_taps()
    eng.step_once()
    return eng.state


def classify(log: TrajectoryLog, spec: ProblemSpec, *,
             spread_lengths: float = 5.0, spread_level: float = 0.5,
             vanish_growth: float | None = None, vanish_level: float = 0.01) -> str:
    """Finite-time surrogate of the spreading/vanishing dichotomy.

    Spreading: over the last half of the run the front gained at least
    ``spread_lengths`` interaction lengths and the field still sits above
    ``spread_level * u*``.  Vanishing: the front plateaued (growth below one
    cell) and the field fell under ``vanish_level * u*``.  Anything else is
    undecided; the thresholds are judgment calls and stay overridable.
    """
    t = np.asarray(log.t)
    h = np.asarray(log.h)
    if len(t) < 3:
        return "undecided"
    u_star = spec.reaction.u_star
    if not u_star:
        raise ContractError("classify needs a reaction with a positive zero u*")
    ell = log.meta.get("ell") or min(spec.kernel.interaction_length(), 25.0)
    dx = log.meta.get("dx", 0.05)
    half = np.searchsorted(t, t[-1] / 2.0)
    growth = h[-1] - h[half]
    sup_end = log.sup_u[-1]
    if growth >= spread_lengths * ell and sup_end > spread_level * u_star:
        return "spreading"
    cap = vanish_growth if vanish_growth is not None else dx
    if growth < cap and sup_end < vanish_level * u_star:
        return "vanishing"
    return "undecided"


# ---------------------------------------------------------------------------
# pointwise operator surfaces (diagnostics and fixture checks)
# ---------------------------------------------------------------------------


def nonlocal_operator(kernel: Kernel, u: Field, window: tuple, x: float,
                      d: float = 1.0, form: str = "halfline") -> float:
    """d * int_window J(x-y) u(y) dy - d * j(x) * u(x)  (or d*u for full-line).

    Quadrature matches the solver: trapezoid on the field nodes inside the
    window, exact triangular weight on the partial end cells.
    """
    lo, hi = window
    if not (lo - 1e-12 <= x <= hi + 1e-12):
        raise ContractError(f"x = {x} lies outside the window {window}")
    vals = _window_integral(kernel, u, lo, hi, np.asarray([x], dtype=float))[0]
    ux = float(u.at(x))
    j = float(kernel.halfline_mass(max(x, 0.0))) if form == "halfline" else 1.0
    return d * vals - d * j * ux


def _cell_avg_row(kernel: Kernel, z: np.ndarray, dx: float) -> np.ndarray:
    """Cell averages of J over [z - dx/2, z + dx/2]: the taps, off-grid."""
    z = np.asarray(z, dtype=float)

    def cdf(v):
        v = np.asarray(v, dtype=float)
        return np.where(v >= 0.0, 1.0 - kernel.tail_mass(np.maximum(v, 0.0)),
                        kernel.tail_mass(np.maximum(-v, 0.0)))

    return (cdf(z + 0.5 * dx) - cdf(z - 0.5 * dx)) / dx


def _window_integral(kernel: Kernel, u: Field, lo: float, hi: float,
                     xq: np.ndarray) -> np.ndarray:
    """int_lo^hi J(xq - y) u(y) dy for each query point."""
    i_hi, x_hi, s_hi = _front_cell(u.x0, u.dx, hi)
    i_lo, x_lo, s_lo = _left_cell(u.x0, u.dx, lo)
    if i_hi < i_lo:
        raise ContractError("window contains no field nodes")
    w = np.zeros(len(u.values))
    w[i_lo:i_hi + 1] = 1.0
    w[i_lo] = 0.5
    w[i_hi] = 0.5 if i_hi > i_lo else 0.0
    wu = u.values * w
    y = u.x
    out = np.empty(len(xq))
    for k, xk in enumerate(xq):
        out[k] = float(np.dot(_cell_avg_row(kernel, xk - y[i_lo:i_hi + 1], u.dx),
                              wu[i_lo:i_hi + 1])) * u.dx
        if s_hi > 0.0:
            u_edge = float(u.at(x_hi))
            u_end = float(u.at(hi))
            area = s_hi * 0.5 * (u_edge + u_end)
            yc = x_hi + s_hi * (u_edge + 2.0 * u_end) / (3.0 * (u_edge + u_end)) \
                if (u_edge + u_end) > 0 else x_hi + 0.5 * s_hi
            out[k] += area * float(kernel.evaluate(xk - yc))
        if s_lo > 0.0:
            u_edge = float(u.at(x_lo))
            u_end = float(u.at(lo))
            area = s_lo * 0.5 * (u_edge + u_end)
            yc = x_lo - s_lo * (u_edge + 2.0 * u_end) / (3.0 * (u_edge + u_end)) \
                if (u_edge + u_end) > 0 else x_lo - 0.5 * s_lo
            out[k] += area * float(kernel.evaluate(xk - yc))
    return out


def boundary_flux(kernel: Kernel, u: Field, h: float, lo: float = 0.0) -> float:
    """The front double integral int_lo^h tail_mass(h - x) u(x) dx (no mu factor)."""
    if np.any(u.values < -1e-12):
        raise ContractError("boundary_flux expects a nonnegative field")
    i_hi, x_hi, s_hi = _front_cell(u.x0, u.dx, h)
    i_lo, x_lo, s_lo = _left_cell(u.x0, u.dx, lo)
    if i_hi < i_lo:
        return 0.0
    w = np.ones(i_hi - i_lo + 1)
    w[0] = 0.5
    if len(w) > 1:
        w[-1] = 0.5
    x = u.x[i_lo:i_hi + 1]
    tails = kernel.tail_mass(np.maximum(h - x, 0.0))
    val = float(np.dot(tails, u.values[i_lo:i_hi + 1] * w)) * u.dx
    if s_hi > 0.0:
        u_edge = float(u.at(x_hi))
        u_end = float(u.at(h))
        area = s_hi * 0.5 * (u_edge + u_end)
        yc = x_hi + s_hi / 3.0 if u_end == 0.0 else x_hi + 0.5 * s_hi
        val += area * float(kernel.tail_mass(max(h - yc, 0.0)))
    return val
