"""Dispersal kernel families: evaluation, tails, moments, classification.

Every family is even, continuous, positive at the origin and normalized to
unit mass.  Cumulative tails ``tail_mass(s) = int_s^inf J`` are closed form
for all families; they drive the solver's cell-averaged quadrature taps and
the heavy-tail completions, so no adaptive quadrature sits in a hot loop.

Families
--------
CompactUniform(r)     J(x) = 1/(2r) on |x| <= r
CompactCosine(r)      J(x) = (pi/4r) cos(pi x / 2r) on |x| <= r
AlgebraicTail(g, a)   J(x) = c (a + |x|)^(-g), c = (g-1) a^(g-1) / 2
LightExponential(l0)  J(x) = (l0/2) exp(-l0 |x|)

The algebraic family keeps J continuous with J(0) > 0 while matching the
|x|^(-gamma) tail exactly; the bounding constants sigma1/sigma2 and the
threshold where they apply are stored on the kernel.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import ValidationError

__all__ = [
    "Kernel",
    "CompactUniform",
    "CompactCosine",
    "AlgebraicTail",
    "LightExponential",
    "TruncatedKernel",
    "KernelReport",
    "evaluate",
    "tail_mass",
    "halfline_mass",
    "first_moment",
    "exp_moment",
    "condition_report",
    "truncate",
    "kernel_from_json",
    "kernel_to_json",
]

# Quadrature tolerances for the unit-mass audit.
MASS_TOL_SMOOTH = 1e-8
MASS_TOL_ALGEBRAIC = 1e-6


@dataclass(frozen=True)
class KernelReport:
    """Which of the structural conditions a kernel satisfies."""

    satisfies_J: bool
    satisfies_J1: bool
    satisfies_J2: bool
    first_moment: float            # +inf when divergent
    mgf_abscissa: float            # sup of lambdas with finite exp moment
    gamma_class: str | None = None  # "(1,2]", "(2,inf)" or None

    def __post_init__(self):
        if self.satisfies_J2 and not self.satisfies_J1:
            raise ValidationError("inconsistent report: (J2) implies (J1)")

    def to_json(self) -> dict:
        d = asdict(self)
        if math.isinf(d["first_moment"]):
            d["first_moment"] = "inf"
        if math.isinf(d["mgf_abscissa"]):
            d["mgf_abscissa"] = "inf"
        return d


class Kernel:
    """Base class: closed-form evaluation and tails, generic derived ops."""

    family = "abstract"

    # -- closed forms supplied by subclasses ------------------------------

    def evaluate(self, x):
        """Density J(x); accepts scalars or arrays."""
        raise NotImplementedError

    def tail_mass(self, s):
        """``int_s^inf J(z) dz`` for s >= 0.  Decreasing, tail_mass(0)=1/2."""
        raise NotImplementedError

    def tail_mass_integral_between(self, s1, s2):
        """``int_{s1}^{s2} tail_mass(z) dz`` (always finite)."""
        raise NotImplementedError

    def first_moment(self) -> float:
        """``int_0^inf x J(x) dx``; +inf when (J1) fails."""
        raise NotImplementedError

    def exp_moment(self, lam: float) -> float:
        """``int_R J(x) e^(lam x) dx``; +inf when divergent."""
        raise NotImplementedError

    def mgf_abscissa(self) -> float:
        raise NotImplementedError

    def support_radius(self) -> float:
        return math.inf

    def params(self) -> dict:
        raise NotImplementedError

    # -- generic derived operations ---------------------------------------

    def halfline_mass(self, x):
        """j(x) = int_0^inf J(x - y) dy = 1 - tail_mass(x) for x >= 0."""
        return 1.0 - self.tail_mass(x)

    def tail_mass_integral(self, s: float) -> float:
        """``int_s^inf tail_mass(z) dz``; +inf exactly when (J1) fails."""
        if math.isinf(self.first_moment()):
            return math.inf
        # int_s^inf tail = int_s^inf (z - s) J(z) dz, finite under (J1)
        return self._tail_integral_to_inf(s)

    def _tail_integral_to_inf(self, s: float) -> float:
        raise NotImplementedError

    def partial_first_moment(self, s1: float, s2: float) -> float:
        """``int_{s1}^{s2} x J(x) dx`` via integration by parts (closed form)."""
        if s2 < s1:
            raise ValidationError("partial_first_moment needs s1 <= s2")
        t1, t2 = self.tail_mass(s1), self.tail_mass(s2)
        return s1 * t1 - s2 * t2 + self.tail_mass_integral_between(s1, s2)

    def interaction_length(self, eps: float = 1e-3, cap: float = 1e6) -> float:
        """Smallest s with tail_mass(s) <= eps, capped.

        Used for window headroom and dichotomy thresholds; for compact
        kernels this is essentially the support radius.
        """
        r = self.support_radius()
        if math.isfinite(r):
            return r
        lo, hi = 0.0, 1.0
        while self.tail_mass(hi) > eps:
            hi *= 2.0
            if hi >= cap:
                return cap
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.tail_mass(mid) > eps:
                lo = mid
            else:
                hi = mid
        return hi

    def total_mass(self) -> float:
        """Unit-mass audit: adaptive quadrature on a core + closed-form tails."""
        r = self.support_radius()
        core = r if math.isfinite(r) else 10.0 * self.interaction_length(1e-2, cap=1e3)
        val, _ = integrate.quad(lambda x: float(self.evaluate(x)), -core, core,
                                limit=400)
        return val + 2.0 * self.tail_mass(core)

    def quadrature_scale(self) -> float:
        """Length scale over which J varies; grids should resolve it."""
        r = self.support_radius()
        return r if math.isfinite(r) else 1.0

    def mass_exact(self) -> float:
        """Total mass by construction; sub-probability truncations override."""
        return 1.0

    def taps(self, dx: float, m: int) -> np.ndarray:
        """Cell-averaged samples K_j = mean of J over [(j-1/2)dx, (j+1/2)dx].

        Symmetric array of length 2m+1.  ``dx * sum(taps)`` equals the exact
        mass on [-(m+1/2)dx, (m+1/2)dx], so a convolution against a constant
        field reproduces the constant without quadrature bias even for
        discontinuous or heavy-tailed J.
        """
        return _taps_cached(self, float(dx), int(m))

    # -- classification -----------------------------------------------------

    def condition_report(self) -> KernelReport:
        self._audit()
        m1 = self.first_moment()
        mgf = self.mgf_abscissa()
        return KernelReport(
            satisfies_J=True,
            satisfies_J1=math.isfinite(m1),
            satisfies_J2=mgf > 0.0,
            first_moment=m1,
            mgf_abscissa=mgf,
            gamma_class=self._gamma_class(),
        )

    def _gamma_class(self):
        return None

    def _audit(self):
        xs = np.array([0.0, 0.1, 0.37, 1.0, 2.3, 7.0])
        vals_p = self.evaluate(xs)
        vals_m = self.evaluate(-xs)
        if np.any(vals_p < 0.0) or np.any(vals_m < 0.0):
            raise ValidationError("kernel takes negative values")
        if not np.allclose(vals_p, vals_m, rtol=0.0, atol=1e-12):
            raise ValidationError("kernel is not even")
        if not float(self.evaluate(0.0)) > 0.0:
            raise ValidationError("kernel vanishes at the origin")
        tol = MASS_TOL_ALGEBRAIC if isinstance(self, AlgebraicTail) else MASS_TOL_SMOOTH
        mass = self.total_mass()
        if abs(mass - 1.0) > tol:
            raise ValidationError(f"kernel mass {mass!r} deviates from 1 beyond {tol}")

    def to_json(self) -> dict:
        return {"family": self.family, **self.params()}


@lru_cache(maxsize=256)
def _taps_cached(kernel, dx: float, m: int) -> np.ndarray:
    edges = (np.arange(m + 1) + 0.5) * dx
    tails = np.asarray(kernel.tail_mass(edges), dtype=float).reshape(-1)
    half = np.empty(m + 1)
    half[0] = (kernel.mass_exact() - 2.0 * tails[0]) / dx
    half[1:] = (tails[:-1] - tails[1:]) / dx
    out = np.concatenate([half[:0:-1], half])
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# concrete families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompactUniform(Kernel):
    """Uniform density on [-r, r]."""

    r: float = 1.0
    family = "compact-uniform"

    def __post_init__(self):
        if not self.r > 0.0:
            raise ValidationError("uniform kernel needs r > 0")

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(np.abs(x) <= self.r, 1.0 / (2.0 * self.r), 0.0)
        return out if out.ndim else float(out)

    def tail_mass(self, s):
        s = np.asarray(s, dtype=float)
        out = np.clip(self.r - s, 0.0, None) / (2.0 * self.r)
        return out if out.ndim else float(out)

    def tail_mass_integral_between(self, s1, s2):
        a = min(s1, self.r)
        b = min(s2, self.r)
        # int (r-z)/(2r) dz = -(r-z)^2/(4r)
        return ((self.r - a) ** 2 - (self.r - b) ** 2) / (4.0 * self.r)

    def _tail_integral_to_inf(self, s):
        return self.tail_mass_integral_between(s, self.r) if s < self.r else 0.0

    def first_moment(self):
        return self.r / 4.0

    def exp_moment(self, lam):
        z = lam * self.r
        return math.sinh(z) / z if z != 0.0 else 1.0

    def mgf_abscissa(self):
        return math.inf

    def support_radius(self):
        return self.r

    def params(self):
        return {"r": self.r}


@dataclass(frozen=True)
class CompactCosine(Kernel):
    """Cosine bump (pi/4r) cos(pi x / 2r) on [-r, r]; C^0 at the support edge."""

    r: float = 1.0
    family = "compact-cosine"

    def __post_init__(self):
        if not self.r > 0.0:
            raise ValidationError("cosine kernel needs r > 0")

    @property
    def _a(self):
        return math.pi / (2.0 * self.r)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(np.abs(x) <= self.r,
                       (math.pi / (4.0 * self.r)) * np.cos(self._a * x), 0.0)
        out = np.clip(out, 0.0, None)
        return out if out.ndim else float(out)

    def tail_mass(self, s):
        s = np.asarray(s, dtype=float)
        sc = np.clip(s, 0.0, self.r)
        out = 0.5 * (1.0 - np.sin(self._a * sc))
        out = np.where(s >= self.r, 0.0, out)
        return out if out.ndim else float(out)

    def tail_mass_integral_between(self, s1, s2):
        a = self._a
        lo, hi = min(s1, self.r), min(s2, self.r)
        # int (1 - sin(a z))/2 dz = z/2 + cos(a z)/(2a)
        f = lambda z: z / 2.0 + math.cos(a * z) / (2.0 * a)
        return f(hi) - f(lo)

    def _tail_integral_to_inf(self, s):
        return self.tail_mass_integral_between(s, self.r) if s < self.r else 0.0

    def first_moment(self):
        return self.r * (0.5 - 1.0 / math.pi)

    def exp_moment(self, lam):
        a = self._a
        return (math.pi / (4.0 * self.r)) * 2.0 * a * math.cosh(lam * self.r) / (lam * lam + a * a)

    def mgf_abscissa(self):
        return math.inf

    def support_radius(self):
        return self.r

    def params(self):
        return {"r": self.r}


@dataclass(frozen=True)
class AlgebraicTail(Kernel):
    """Smooth heavy-tailed family c (a + |x|)^(-gamma) with exact power tail.

    Satisfies the two-sided power bound with sigma2 = c for all x != 0 and
    sigma1 = c (xbar/(a+xbar))^gamma for |x| >= xbar (default xbar = 10 a).
    """

    gamma: float
    a: float = 1.0
    family = "algebraic"

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValidationError("algebraic kernel needs gamma > 1 for unit mass")
        if not self.a > 0.0:
            raise ValidationError("algebraic kernel needs shape offset a > 0")

    @property
    def c(self) -> float:
        """Normalizing constant (gamma-1) a^(gamma-1) / 2."""
        return 0.5 * (self.gamma - 1.0) * self.a ** (self.gamma - 1.0)

    @property
    def xbar(self) -> float:
        return 10.0 * self.a

    @property
    def sigma1(self) -> float:
        return self.c * (self.xbar / (self.a + self.xbar)) ** self.gamma

    @property
    def sigma2(self) -> float:
        return self.c

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        out = self.c * (self.a + np.abs(x)) ** (-self.gamma)
        return out if out.ndim else float(out)

    def tail_mass(self, s):
        s = np.asarray(s, dtype=float)
        out = (self.c / (self.gamma - 1.0)) * (self.a + s) ** (1.0 - self.gamma)
        return out if out.ndim else float(out)

    def tail_mass_integral_between(self, s1, s2):
        g, a, c = self.gamma, self.a, self.c
        if g == 2.0:
            return c * math.log((a + s2) / (a + s1))
        k = c / ((g - 1.0) * (2.0 - g))
        return k * ((a + s2) ** (2.0 - g) - (a + s1) ** (2.0 - g))

    def _tail_integral_to_inf(self, s):
        g, a, c = self.gamma, self.a, self.c
        return c * (a + s) ** (2.0 - g) / ((g - 1.0) * (g - 2.0))

    def first_moment(self):
        g, a, c = self.gamma, self.a, self.c
        if g <= 2.0:
            return math.inf
        return c * a ** (2.0 - g) / ((g - 1.0) * (g - 2.0))

    def exp_moment(self, lam):
        return math.inf

    def mgf_abscissa(self):
        return 0.0

    def params(self):
        return {"gamma": self.gamma, "a": self.a}

    def _gamma_class(self):
        return "(1,2]" if self.gamma <= 2.0 else "(2,inf)"


@dataclass(frozen=True)
class LightExponential(Kernel):
    """Two-sided exponential (lambda0/2) exp(-lambda0 |x|): unbounded support, (J2) holds."""

    lambda0: float = 1.0
    family = "light-exponential"

    def __post_init__(self):
        if not self.lambda0 > 0.0:
            raise ValidationError("exponential kernel needs lambda0 > 0")

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        out = 0.5 * self.lambda0 * np.exp(-self.lambda0 * np.abs(x))
        return out if out.ndim else float(out)

    def tail_mass(self, s):
        s = np.asarray(s, dtype=float)
        out = 0.5 * np.exp(-self.lambda0 * s)
        return out if out.ndim else float(out)

    def tail_mass_integral_between(self, s1, s2):
        l0 = self.lambda0
        return (math.exp(-l0 * s1) - math.exp(-l0 * s2)) / (2.0 * l0)

    def _tail_integral_to_inf(self, s):
        return math.exp(-self.lambda0 * s) / (2.0 * self.lambda0)

    def first_moment(self):
        return 0.5 / self.lambda0

    def exp_moment(self, lam):
        if abs(lam) >= self.lambda0:
            return math.inf
        l2 = self.lambda0 * self.lambda0
        return l2 / (l2 - lam * lam)

    def mgf_abscissa(self):
        return self.lambda0

    def quadrature_scale(self):
        return 1.0 / self.lambda0

    def params(self):
        return {"lambda0": self.lambda0}


# ---------------------------------------------------------------------------
# truncation J_n(x) = xi(x/n) J(x), xi = plateau cutoff
# ---------------------------------------------------------------------------


def _plateau(z):
    z = np.abs(np.asarray(z, dtype=float))
    return np.clip(2.0 - z, 0.0, 1.0)


@dataclass(frozen=True)
class TruncatedKernel:
    """Sub-probability kernel J_n = xi(x/n) J(x): equals J on |x|<=n, 0 past 2n.

    Carries enough of the kernel interface (tails, taps, half-line mass) to
    drive the solvers, so truncation composes with reaction perturbation the
    way the approximating systems require.
    """

    base: Kernel
    n: float

    def __post_init__(self):
        if not self.n > 0.0:
            raise ValidationError("truncation radius must be positive")

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        out = _plateau(x / self.n) * self.base.evaluate(x)
        return out if out.ndim else float(out)

    def support_radius(self):
        return min(2.0 * self.n, self.base.support_radius())

    def quadrature_scale(self):
        return min(self.base.quadrature_scale(), self.support_radius())

    def interaction_length(self, eps: float = 1e-3, cap: float = 1e6) -> float:
        return min(self.support_radius(), self.base.interaction_length(eps, cap))

    def _tail_scalar(self, s: float) -> float:
        n, b = self.n, self.base
        if s >= 2.0 * n:
            return 0.0
        lo = max(s, n)
        # taper band [lo, 2n]: integrand (2 - x/n) J(x)
        band = 2.0 * (b.tail_mass(lo) - b.tail_mass(2.0 * n)) \
            - b.partial_first_moment(lo, 2.0 * n) / n
        if s < n:
            band += b.tail_mass(s) - b.tail_mass(n)
        return band

    def tail_mass(self, s):
        """``int_s^inf J_n``, closed form through base tails and partial moments."""
        s = np.asarray(s, dtype=float)
        if s.ndim == 0:
            return self._tail_scalar(float(s))
        return np.array([self._tail_scalar(v) for v in s.ravel()]).reshape(s.shape)

    def mass(self) -> float:
        return 2.0 * self._tail_scalar(0.0)

    def mass_exact(self) -> float:
        return self.mass()

    def halfline_mass(self, x):
        """j_n(x) = int_0^inf J_n(x-y) dy = mass - tail(x) for x >= 0."""
        return self.mass() - self.tail_mass(x)

    def taps(self, dx: float, m: int) -> np.ndarray:
        return _taps_cached(self, float(dx), int(m))

    def first_moment(self) -> float:
        val, _ = integrate.quad(lambda x: x * float(self.evaluate(x)),
                                0.0, 2.0 * self.n, limit=400)
        return val

    def to_json(self) -> dict:
        return {"family": "truncated", "n": self.n, "base": self.base.to_json()}


# ---------------------------------------------------------------------------
# operation-style wrappers and JSON interface
# ---------------------------------------------------------------------------


def evaluate(kernel, x):
    return kernel.evaluate(x)


def tail_mass(kernel, s):
    if np.any(np.asarray(s) < 0.0):
        raise ValidationError("tail_mass requires s >= 0")
    return kernel.tail_mass(s)


def halfline_mass(kernel, x):
    if np.any(np.asarray(x) < 0.0):
        raise ValidationError("halfline_mass requires x >= 0")
    return kernel.halfline_mass(x)


def first_moment(kernel):
    return kernel.first_moment()


def exp_moment(kernel, lam):
    if not lam > 0.0:
        raise ValidationError("exp_moment requires lambda > 0")
    return kernel.exp_moment(lam)


def condition_report(kernel):
    return kernel.condition_report()


def truncate(kernel, n):
    return TruncatedKernel(kernel, float(n))


_FAMILIES = {
    "compact-uniform": (CompactUniform, ("r",)),
    "compact-cosine": (CompactCosine, ("r",)),
    "algebraic": (AlgebraicTail, ("gamma", "a")),
    "light-exponential": (LightExponential, ("lambda0",)),
}


def kernel_from_json(obj: dict) -> Kernel:
    if not isinstance(obj, dict) or "family" not in obj:
        raise ValidationError("kernel spec must be an object with a 'family' key")
    fam = obj["family"]
    if fam not in _FAMILIES:
        raise ValidationError(f"unknown kernel family {fam!r}")
    cls, keys = _FAMILIES[fam]
    extra = set(obj) - {"family", *keys}
    if extra:
        raise ValidationError(f"unknown kernel keys {sorted(extra)} for family {fam!r}")
    kwargs = {k: float(obj[k]) for k in keys if k in obj}
    return cls(**kwargs)


def kernel_to_json(kernel: Kernel) -> dict:
    return kernel.to_json()
