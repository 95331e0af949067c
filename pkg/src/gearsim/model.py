"""Gear pair geometry and exact momentum-lattice arithmetic.

Two planar rotors with tooth counts (n1, n2) couple through an even,
2*pi-periodic tooth profile u(x) evaluated at x = n1*theta1 - n2*theta2.
Everything downstream of this module works in center-of-mass / relative
coordinates; here lives the exact (rational) bookkeeping between the integer
angular momenta (m1, m2) and the collective pair (mu_c, mu_r), plus every
derived constant of the pair.

Units: hbar = 1 and the reference moment of inertia is 1, so energies are in
hbar^2/I_ref, times in I_ref/hbar, and angular momenta in hbar.

Quantum numbers are kept as `fractions.Fraction` throughout.  The collective
momenta of a physical state are rationals with small fixed denominators, and
physicality checks ("does this (mu_c, mu_r) come from integers?") are exact
divisibility tests that float arithmetic would corrupt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import NonPhysicalError, UnsupportedInertiaError

__all__ = [
    "PotentialSpec",
    "GearConfig",
    "DerivedGeometry",
    "CollectiveMomentum",
    "GridSpec",
    "derive_geometry",
    "momenta_to_collective",
    "collective_to_momenta",
    "is_physical_mu_c",
    "allowed_relative_grid",
    "bloch_label",
    "angular_momentum_split",
]


def _as_fraction(x, what: str) -> Fraction:
    """Coerce an exact rational input (int, Fraction, float) to Fraction.

    Floats are converted by their exact binary value, which is what the
    caller supplied; no rounding or snapping happens here.
    """
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"{what} must be finite, got {x!r}")
        return Fraction(x)
    raise TypeError(f"{what} must be a rational number, got {type(x).__name__}")


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Extended Euclid: returns (g, x, y) with a*x + b*y = g = gcd(a, b)."""
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    return old_r, old_x, old_y


@dataclass(frozen=True)
class PotentialSpec:
    """Even 2*pi-periodic tooth profile u(x) = a0 + sum_p a_p cos(p x).

    `fourier` lists (harmonic index p, coefficient a_p) pairs.  The default
    is the raised cosine u(x) = (1 + cos x)/2, whose minimum value is 0.
    """

    fourier: tuple[tuple[int, float], ...] = ((0, 0.5), (1, 0.5))

    def __post_init__(self):
        clean = []
        seen = set()
        for item in self.fourier:
            p, a = item
            p = int(p)
            if p < 0:
                raise ValueError(f"harmonic index must be >= 0, got {p}")
            if p in seen:
                raise ValueError(f"duplicate harmonic index {p}")
            a = float(a)
            if not math.isfinite(a):
                raise ValueError(f"non-finite coefficient for harmonic {p}")
            seen.add(p)
            clean.append((p, a))
        object.__setattr__(self, "fourier", tuple(clean))

    @property
    def a0(self) -> float:
        return dict(self.fourier).get(0, 0.0)

    def harmonics(self) -> tuple[tuple[int, float], ...]:
        """The p >= 1 terms with nonzero coefficient."""
        return tuple((p, a) for p, a in self.fourier if p >= 1 and a != 0.0)

    def value(self, x: float) -> float:
        """u(x)."""
        u = self.a0
        for p, a in self.harmonics():
            u += a * math.cos(p * x)
        return u

    def derivative(self, x: float) -> float:
        """u'(x)."""
        du = 0.0
        for p, a in self.harmonics():
            du -= p * a * math.sin(p * x)
        return du

    def curvature_at_origin(self) -> float:
        """-u''(0) ... sum_p p^2 a_p; the well curvature when x=0 is a maximum."""
        return sum(p * p * a for p, a in self.harmonics())

    def min_value(self, samples: int = 8192) -> float:
        """Minimum of u over a period (sampled; exact 0 for the default)."""
        xs = np.linspace(0.0, 2.0 * math.pi, samples, endpoint=False)
        u = np.full(samples, self.a0)
        for p, a in self.harmonics():
            u += a * np.cos(p * xs)
        return float(u.min())


@dataclass(frozen=True)
class GearConfig:
    """Physical parameters of a gear pair.

    n1, n2 : tooth counts (positive integers)
    I1, I2 : moments of inertia (in units of the reference inertia)
    V0     : coupling strength multiplying the tooth profile
    """

    n1: int
    n2: int
    I1: float = 1.0
    I2: float = 1.0
    V0: float = 0.0
    potential: PotentialSpec = PotentialSpec()

    def __post_init__(self):
        for name in ("n1", "n2"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ValueError(f"{name} must be an integer, got {v!r}")
            if v < 1:
                raise ValueError(f"{name} must be >= 1, got {v}")
        for name in ("I1", "I2"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
            object.__setattr__(self, name, v)
        v0 = float(self.V0)
        if not math.isfinite(v0) or v0 < 0:
            raise ValueError(f"V0 must be >= 0 and finite, got {v0!r}")
        object.__setattr__(self, "V0", v0)
        if not isinstance(self.potential, PotentialSpec):
            raise ValueError("potential must be a PotentialSpec")

    @property
    def equal_inertia(self) -> bool:
        return self.I1 == self.I2


@dataclass(frozen=True)
class CollectiveMomentum:
    """Exact center-of-mass / relative momentum pair."""

    mu_c: Fraction
    mu_r: Fraction


@dataclass(frozen=True)
class GridSpec:
    """Symmetric window of the allowed relative-momentum lattice.

    Grid points are mu_r = mu_r_offset + spacing * j for j in
    [-half_width, half_width].  Offset and spacing are exact.
    """

    mu_r_offset: Fraction
    spacing: Fraction
    half_width: int

    def __post_init__(self):
        object.__setattr__(self, "mu_r_offset", Fraction(self.mu_r_offset))
        object.__setattr__(self, "spacing", Fraction(self.spacing))
        if self.spacing <= 0:
            raise ValueError("grid spacing must be positive")
        if not isinstance(self.half_width, int) or self.half_width < 0:
            raise ValueError("half_width must be a non-negative integer")

    @property
    def size(self) -> int:
        return 2 * self.half_width + 1

    def value(self, j: int) -> Fraction:
        """Exact mu_r at signed grid index j (j=0 is the window center)."""
        return self.mu_r_offset + self.spacing * j

    def values(self) -> np.ndarray:
        """All grid mu_r values as floats, ascending."""
        j = np.arange(-self.half_width, self.half_width + 1, dtype=float)
        return float(self.mu_r_offset) + float(self.spacing) * j

    def index_of(self, mu_r) -> int:
        """Signed index of an exact mu_r; NonPhysicalError if off-lattice
        or outside the window."""
        j = (Fraction(mu_r) - self.mu_r_offset) / self.spacing
        if j.denominator != 1:
            raise NonPhysicalError(f"mu_r={mu_r} not on grid {self}")
        j = int(j)
        if abs(j) > self.half_width:
            raise NonPhysicalError(f"mu_r={mu_r} outside grid window {self}")
        return j


@dataclass(frozen=True)
class DerivedGeometry:
    """Every derived constant of a gear pair, computed once by
    `derive_geometry`.

    Public floats are for numerics; the underscore Fractions are the exact
    transform coefficients used by the lattice arithmetic.
    """

    config: GearConfig
    n: int                 # n1 + n2
    g: int                 # gcd(n1, n2)
    M1: int                # n2/g  (integers entering the revival identity)
    M2: int                # n1/g
    I: float               # (I1 + I2)/2
    I_c: float             # center-of-mass moment of inertia
    I_r: float             # relative moment of inertia
    nu: Fraction           # (M1^2 I1 + M2^2 I2) / ((M1 + M2) I), exact
    grid_spacing: int      # M1 + M2 = n/g, relative-lattice step at fixed mu_c
    r_cl: Fraction         # classical transmission benchmark n1 n2/(n1^2+n2^2)
    tau_c: float           # center-of-mass revival time 4 pi (M1^2 I1 + M2^2 I2)
    omega0: float          # n sqrt(V0/I_r)
    omega0_harmonic: float  # small-oscillation frequency in the actual well
    L_r_threshold: float   # sqrt(2 I_r V0): classical interlock edge in L_r
    ell_threshold: float   # same edge expressed as a kick on gear 1
    # exact transform coefficients
    _I1: Fraction
    _I2: Fraction
    _I: Fraction
    _I_c: Fraction
    _I_r: Fraction
    _mu_c_factor: Fraction  # I_c/(n I):    mu_c = _mu_c_factor*(n2 m1 + n1 m2)
    _mu_r_factor: Fraction  # I_c/(n I^2):  mu_r = _mu_r_factor*(n1 I2 m1 - n2 I1 m2)
    _lc_to_l1: Fraction     # n2 I1/(n I):  L1 = _lc_to_l1*L_c + (n1/n) L_r
    _lc_to_l2: Fraction     # n1 I2/(n I):  L2 = _lc_to_l2*L_c - (n2/n) L_r

    @property
    def equal_inertia(self) -> bool:
        return self.config.equal_inertia


def derive_geometry(config: GearConfig) -> DerivedGeometry:
    """Compute all derived constants for a gear pair."""
    n1, n2 = config.n1, config.n2
    I1 = _as_fraction(config.I1, "I1")
    I2 = _as_fraction(config.I2, "I2")
    n = n1 + n2
    g = math.gcd(n1, n2)
    M1 = n2 // g
    M2 = n1 // g
    I = (I1 + I2) / 2
    denom = n1 * n1 * I2 + n2 * n2 * I1
    I_c = Fraction(n * n) * I * I / denom
    I_r = Fraction(n * n) * I1 * I2 / denom
    nu = (M1 * M1 * I1 + M2 * M2 * I2) / ((M1 + M2) * I)
    V0 = config.V0
    I_r_f = float(I_r)
    omega0 = n * math.sqrt(V0 / I_r_f)
    omega0_harm = n * math.sqrt(V0 * config.potential.curvature_at_origin() / I_r_f)
    # well depth seen by a state started at the aligned configuration x=0
    depth = V0 * max(0.0, config.potential.value(0.0) - config.potential.min_value())
    L_r_star = math.sqrt(2.0 * I_r_f * depth)
    # a kick ell on gear 1 delivers d mu_r = ell * n n1 I2 / (n1^2 I2 + n2^2 I1);
    # the threshold kick solves |d mu_r| = L_r_star
    mu_r_per_ell1 = float(Fraction(n * n1) * I2 / denom)
    ell_star = L_r_star / mu_r_per_ell1 if V0 > 0 else 0.0
    return DerivedGeometry(
        config=config,
        n=n,
        g=g,
        M1=M1,
        M2=M2,
        I=float(I),
        I_c=float(I_c),
        I_r=I_r_f,
        nu=nu,
        grid_spacing=M1 + M2,
        r_cl=Fraction(n1 * n2, n1 * n1 + n2 * n2),
        tau_c=4.0 * math.pi * float(M1 * M1 * I1 + M2 * M2 * I2),
        omega0=omega0,
        omega0_harmonic=omega0_harm,
        L_r_threshold=L_r_star,
        ell_threshold=ell_star,
        _I1=I1,
        _I2=I2,
        _I=I,
        _I_c=I_c,
        _I_r=I_r,
        _mu_c_factor=n * I / denom,
        _mu_r_factor=Fraction(n) / denom,
        _lc_to_l1=n2 * I1 / (n * I),
        _lc_to_l2=n1 * I2 / (n * I),
    )


def momenta_to_collective(geom: DerivedGeometry, m1, m2) -> CollectiveMomentum:
    """Exact (m1, m2) -> (mu_c, mu_r).  The map is linear, so it doubles as
    the shift rule for kicks: feeding (l1, l2) gives (d mu_c, d mu_r)."""
    n1, n2 = geom.config.n1, geom.config.n2
    m1 = _as_fraction(m1, "m1")
    m2 = _as_fraction(m2, "m2")
    mu_c = geom._mu_c_factor * (n2 * m1 + n1 * m2)
    mu_r = geom._mu_r_factor * (n1 * geom._I2 * m1 - n2 * geom._I1 * m2)
    return CollectiveMomentum(mu_c, mu_r)


def collective_to_momenta(geom: DerivedGeometry, mu_c, mu_r) -> tuple[int, int]:
    """Exact inverse transform.  Raises NonPhysicalError when the pair does
    not come from integer (m1, m2)."""
    n1, n2 = geom.config.n1, geom.config.n2
    A = _as_fraction(mu_c, "mu_c") / geom._mu_c_factor   # = n2 m1 + n1 m2
    B = _as_fraction(mu_r, "mu_r") / geom._mu_r_factor   # = n1 I2 m1 - n2 I1 m2
    denom = n1 * n1 * geom._I2 + n2 * n2 * geom._I1
    m1 = (n2 * geom._I1 * A + n1 * B) / denom
    m2 = (n1 * geom._I2 * A - n2 * B) / denom
    if m1.denominator != 1 or m2.denominator != 1:
        raise NonPhysicalError(
            f"(mu_c={mu_c}, mu_r={mu_r}) has no integer momentum preimage"
        )
    return int(m1), int(m2)


def _integer_A(geom: DerivedGeometry, mu_c) -> int:
    """mu_c expressed as the integer A = n2 m1 + n1 m2; NonPhysicalError if
    mu_c is not realizable."""
    A = _as_fraction(mu_c, "mu_c") / geom._mu_c_factor
    if A.denominator != 1 or int(A) % geom.g != 0:
        raise NonPhysicalError(f"mu_c={mu_c} is not realizable by integer momenta")
    return int(A)


def is_physical_mu_c(geom: DerivedGeometry, mu_c) -> bool:
    """True when some integer (m1, m2) produces this mu_c."""
    try:
        _integer_A(geom, mu_c)
    except NonPhysicalError:
        return False
    return True


def allowed_relative_grid(geom: DerivedGeometry, mu_c, half_width: int = 32) -> GridSpec:
    """The mu_r lattice compatible with a fixed physical mu_c.

    The allowed values form an arithmetic progression with exact spacing
    n/gcd(n1, n2); the returned window is centered on the representative
    offset reduced into (-spacing/2, spacing/2], which keeps the window
    symmetric under mu_r -> -mu_r whenever the lattice itself is.

    Equal moments of inertia only (the fixed-mu_c lattice is not a single
    arithmetic progression otherwise).
    """
    if not geom.equal_inertia:
        raise UnsupportedInertiaError(
            "fixed-mu_c relative grid requires I1 == I2"
        )
    n1, n2 = geom.config.n1, geom.config.n2
    A = _integer_A(geom, mu_c)
    g, x, y = _xgcd(n2, n1)   # n2 x + n1 y = g
    assert g == geom.g
    t = A // g
    m1_0, m2_0 = x * t, y * t  # one integer solution of n2 m1 + n1 m2 = A
    mu_r0 = momenta_to_collective(geom, m1_0, m2_0).mu_r
    spacing = Fraction(geom.n, geom.g)
    offset = mu_r0 % spacing
    if offset > spacing / 2:
        offset -= spacing
    return GridSpec(mu_r_offset=offset, spacing=spacing, half_width=half_width)


def bloch_label(geom: DerivedGeometry, mu_r) -> Fraction:
    """Conserved residue k = mu_r mod n, reduced into (-n/2, n/2]."""
    k = _as_fraction(mu_r, "mu_r") % geom.n
    if k > Fraction(geom.n, 2):
        k -= geom.n
    return k


def angular_momentum_split(geom: DerivedGeometry, L_c: float, L_r: float) -> tuple[float, float]:
    """Per-gear expectation values from collective ones (floats)."""
    n1, n2 = geom.config.n1, geom.config.n2
    L1 = float(geom._lc_to_l1) * L_c + (n1 / geom.n) * L_r
    L2 = float(geom._lc_to_l2) * L_c - (n2 / geom.n) * L_r
    return L1, L2
