"""Domain types shared by every other module.

The incoming radiation is described by a small closed algebra of windowed
functions.  Each window carries ``P(x) + A cos(wx) + B sin(wx)`` on a closed
interval and is zero outside it, so derivatives and antiderivatives are
exact and no numerical differentiation is ever needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as npoly

HALF_PI = 0.5 * math.pi


class LightSpeedError(ValueError):
    """The requested quantity only exists for strictly subluminal motion."""


class OutOfDomainError(ValueError):
    """An argument lies outside the range where a map can be inverted."""


class RootFindingError(RuntimeError):
    """Retarded-time inversion failed to converge."""


class IntegrationError(RuntimeError):
    """The ODE integrator stopped before reaching its target."""

    def __init__(self, message: str, t: float | None = None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class ConsistencyError(RuntimeError):
    """Independent evaluation routes for one quantity disagree."""


# ---------------------------------------------------------------------------
# Function descriptors
# ---------------------------------------------------------------------------


def _clean(c: float, scale: float) -> float:
    # cancellation residue from merging equal windows
    return 0.0 if abs(c) <= 8 * np.finfo(float).eps * scale else c


@dataclass(frozen=True)
class Piece:
    """``poly(x - lo) + cos * cos(omega x) + sin * sin(omega x)`` on ``[lo, hi]``.

    The polynomial is expanded about the left edge so narrow windows far from
    the origin keep their accuracy.
    """

    lo: float
    hi: float
    poly: tuple[float, ...] = (0.0,)
    cos: float = 0.0
    sin: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.hi <= self.lo:
            raise ValueError(f"invalid window [{self.lo}, {self.hi}]")
        poly = tuple(float(c) for c in self.poly) or (0.0,)
        cos, sin = float(self.cos), float(self.sin)
        if self.omega == 0.0 and (cos or sin):
            poly = (poly[0] + cos,) + poly[1:]
            cos = sin = 0.0
        object.__setattr__(self, "poly", poly)
        object.__setattr__(self, "cos", cos)
        object.__setattr__(self, "sin", sin)

    @property
    def is_zero(self) -> bool:
        return not any(self.poly) and self.cos == 0.0 and self.sin == 0.0

    def formula(self, x):
        """Evaluate the inside formula without the window cutoff."""
        val = npoly.polyval(np.asarray(x) - self.lo, self.poly)
        if self.omega:
            val = val + self.cos * np.cos(self.omega * x) + self.sin * np.sin(self.omega * x)
        return val

    def formula_scalar(self, x: float) -> float:
        val = 0.0
        xi = x - self.lo
        for c in reversed(self.poly):
            val = val * xi + c
        if self.omega:
            wx = self.omega * x
            val += self.cos * math.cos(wx) + self.sin * math.sin(wx)
        return val

    def derivative(self) -> Piece:
        w = self.omega
        return Piece(
            self.lo,
            self.hi,
            tuple(npoly.polyder(self.poly)) if len(self.poly) > 1 else (0.0,),
            cos=self.sin * w,
            sin=-self.cos * w,
            omega=w,
        )

    def antiderivative_formula(self) -> Piece:
        """Indefinite antiderivative of the inside formula (window kept)."""
        w = self.omega
        return Piece(
            self.lo,
            self.hi,
            tuple(npoly.polyint(self.poly)),
            cos=-self.sin / w if w else 0.0,
            sin=self.cos / w if w else 0.0,
            omega=w,
        )

    def total(self) -> float:
        F = self.antiderivative_formula()
        return F.formula_scalar(self.hi) - F.formula_scalar(self.lo)

    def scaled(self, k: float) -> Piece:
        return Piece(self.lo, self.hi, tuple(k * c for c in self.poly), k * self.cos, k * self.sin, self.omega)


@dataclass(frozen=True)
class SmoothFunction:
    """Finite sum of windowed pieces; the zero function has no pieces."""

    pieces: tuple[Piece, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pieces", _merge(self.pieces))

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x):
        if isinstance(x, (float, int)):
            x = float(x)
            val = 0.0
            for p in self.pieces:
                if p.lo <= x <= p.hi:
                    val += p.formula_scalar(x)
            return val
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for p in self.pieces:
            mask = (x >= p.lo) & (x <= p.hi)
            if np.any(mask):
                out[mask] += p.formula(x[mask])
        return out

    def cumulative(self, x):
        """Integral from minus infinity to ``x``."""
        scalar = np.ndim(x) == 0
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for p in self.pieces:
            F = p.antiderivative_formula()
            xc = np.clip(x, p.lo, p.hi)
            out += F.formula(xc) - F.formula_scalar(p.lo)
        return float(out) if scalar else out

    def integral(self, x1, x2):
        """Integral from ``x1`` to ``x2`` (vectorized)."""
        return self.cumulative(x2) - self.cumulative(x1)

    # -- algebra ------------------------------------------------------------

    def derivative(self) -> SmoothFunction:
        return SmoothFunction(tuple(p.derivative() for p in self.pieces))

    def primitive(self) -> SmoothFunction:
        """Compactly supported antiderivative; each window must have zero mass."""
        out = []
        for p in self.pieces:
            scale = max(1.0, _piece_scale(p)) * (p.hi - p.lo)
            if abs(p.total()) > 1e-12 * scale:
                raise ValueError(
                    f"window [{p.lo}, {p.hi}] has nonzero mass {p.total():.3e}; "
                    "its primitive is not compactly supported"
                )
            F = p.antiderivative_formula()
            c0 = F.formula_scalar(p.lo)
            poly = (F.poly[0] - c0,) + F.poly[1:]
            out.append(Piece(p.lo, p.hi, poly, F.cos, F.sin, F.omega))
        return SmoothFunction(tuple(out))

    def __add__(self, other: SmoothFunction) -> SmoothFunction:
        if not isinstance(other, SmoothFunction):
            return NotImplemented
        return SmoothFunction(self.pieces + other.pieces)

    def __mul__(self, k: float) -> SmoothFunction:
        return SmoothFunction(tuple(p.scaled(float(k)) for p in self.pieces))

    __rmul__ = __mul__

    def __neg__(self) -> SmoothFunction:
        return self * -1.0

    def __sub__(self, other: SmoothFunction) -> SmoothFunction:
        return self + (-other)

    # -- geometry -----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.pieces

    @property
    def support(self) -> tuple[float, float] | None:
        if not self.pieces:
            return None
        return min(p.lo for p in self.pieces), max(p.hi for p in self.pieces)

    @property
    def intervals(self) -> list[tuple[float, float]]:
        return [(p.lo, p.hi) for p in self.pieces]

    @property
    def breakpoints(self) -> list[float]:
        return sorted({e for p in self.pieces for e in (p.lo, p.hi)})

    def jump(self, x0: float) -> float:
        """``f(x0+) - f(x0-)`` using one-sided window formulas."""
        left = sum(p.formula_scalar(x0) for p in self.pieces if p.lo < x0 <= p.hi)
        right = sum(p.formula_scalar(x0) for p in self.pieces if p.lo <= x0 < p.hi)
        return right - left

    def max_jump(self, order: int = 0) -> float:
        f = self
        for _ in range(order):
            f = f.derivative()
        return max((abs(f.jump(x)) for x in self.breakpoints), default=0.0)

    def sup_norm(self, n: int = 2001) -> float:
        if not self.pieces:
            return 0.0
        pts = np.concatenate([np.linspace(p.lo, p.hi, n) for p in self.pieces])
        return float(np.max(np.abs(self(pts))))

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kind": "pieces",
            "pieces": [
                {"lo": p.lo, "hi": p.hi, "poly": list(p.poly), "cos": p.cos, "sin": p.sin, "omega": p.omega}
                for p in self.pieces
            ],
        }

    @classmethod
    def from_dict(cls, desc: dict) -> SmoothFunction:
        return function_from_dict(desc)


def _piece_scale(p: Piece) -> float:
    return max([abs(c) for c in p.poly] + [abs(p.cos), abs(p.sin)])


def _merge(pieces: Iterable[Piece]) -> tuple[Piece, ...]:
    groups: dict[tuple[float, float, float], list[Piece]] = {}
    for p in pieces:
        groups.setdefault((p.lo, p.hi, p.omega), []).append(p)
    merged = []
    for (lo, hi, w), ps in groups.items():
        n = max(len(p.poly) for p in ps)
        polys = np.zeros((len(ps), n))
        for i, p in enumerate(ps):
            polys[i, : len(p.poly)] = p.poly
        scale = max(_piece_scale(p) for p in ps)
        poly = [_clean(c, scale) for c in polys.sum(axis=0)]
        while len(poly) > 1 and poly[-1] == 0.0:
            poly.pop()
        cos = _clean(sum(p.cos for p in ps), scale)
        sin = _clean(sum(p.sin for p in ps), scale)
        q = Piece(lo, hi, tuple(poly), cos, sin, w)
        if not q.is_zero:
            merged.append(q)
    merged.sort(key=lambda p: (p.lo, p.hi, p.omega))
    return tuple(merged)


def zero() -> SmoothFunction:
    return SmoothFunction()


def sine_window(lo: float, hi: float, amplitude: float, omega: float = math.pi) -> SmoothFunction:
    """``amplitude * sin(omega x)`` cut off to ``[lo, hi]``."""
    return SmoothFunction((Piece(lo, hi, (0.0,), 0.0, amplitude, omega),))


def cosine_window(lo: float, hi: float, amplitude: float, omega: float = math.pi) -> SmoothFunction:
    return SmoothFunction((Piece(lo, hi, (0.0,), amplitude, 0.0, omega),))


def sine_bump(lo: float, hi: float, amplitude: float) -> SmoothFunction:
    """``amplitude * sin^2(pi (x - lo) / (hi - lo))`` on ``[lo, hi]``; C^1 at the edges."""
    L = hi - lo
    w = 2 * math.pi / L
    # sin^2(u) = (1 - cos 2u)/2 with 2u = w x - w lo
    return SmoothFunction(
        (
            Piece(
                lo,
                hi,
                (0.5 * amplitude,),
                cos=-0.5 * amplitude * math.cos(w * lo),
                sin=-0.5 * amplitude * math.sin(w * lo),
                omega=w,
            ),
        )
    )


def poly_bump(lo: float, hi: float, amplitude: float, order: int = 3) -> SmoothFunction:
    """``amplitude * (1 - r^2)^order`` with ``r`` mapping ``[lo, hi]`` onto ``[-1, 1]``.

    The bump is ``C^(order-1)`` on the whole line.
    """
    L = hi - lo
    r = Polynomial([-1.0, 2.0 / L])  # in the local coordinate x - lo
    coef = amplitude * (1 - r**2) ** order
    return SmoothFunction((Piece(lo, hi, tuple(coef.coef)),))


_FUNCTION_KINDS = ("zero", "sine_window", "cosine_window", "sine_bump", "poly_bump", "sum", "scaled", "pieces")


def function_from_dict(desc: dict) -> SmoothFunction:
    """Build a descriptor from its JSON form (see the CLI schema)."""
    kind = desc.get("kind")
    if kind == "zero":
        return zero()
    if kind == "sine_window":
        return sine_window(desc["lo"], desc["hi"], desc["amplitude"], desc.get("omega", math.pi))
    if kind == "cosine_window":
        return cosine_window(desc["lo"], desc["hi"], desc["amplitude"], desc.get("omega", math.pi))
    if kind == "sine_bump":
        return sine_bump(desc["lo"], desc["hi"], desc["amplitude"])
    if kind == "poly_bump":
        return poly_bump(desc["lo"], desc["hi"], desc["amplitude"], desc.get("order", 3))
    if kind == "sum":
        out = zero()
        for term in desc["terms"]:
            out = out + function_from_dict(term)
        return out
    if kind == "scaled":
        return desc["factor"] * function_from_dict(desc["term"])
    if kind == "pieces":
        return SmoothFunction(tuple(Piece(**p) for p in desc["pieces"]))
    raise ValueError(f"unknown function kind {kind!r}; expected one of {_FUNCTION_KINDS}")


# ---------------------------------------------------------------------------
# Physical inputs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhysicalParams:
    """Charge ``a`` and bare mass ``m`` in units with c = 1."""

    a: float
    m: float

    def __post_init__(self):
        if self.a == 0 or not math.isfinite(self.a):
            raise ValueError("charge a must be finite and nonzero")
        if self.m == 0 or not math.isfinite(self.m):
            raise ValueError("bare mass m must be finite and nonzero")

    @property
    def abs_m(self) -> float:
        return abs(self.m)

    @property
    def self_rate(self) -> float:
        """Signed rate ``a^2 / 2m`` of the free angle equation."""
        return self.a**2 / (2 * self.m)

    def require_positive_charge(self):
        if self.a <= 0:
            raise ValueError("the sensitivity argument assumes a > 0")


@dataclass(frozen=True)
class ProfilePair:
    """Characteristic profiles ``F = V0' + V1`` and ``G = V0' - V1``."""

    F: SmoothFunction
    G: SmoothFunction


@dataclass(frozen=True)
class RadiationPulse:
    """Incoming data ``(V0, V1)`` added to the static kink at t = 0."""

    v0: SmoothFunction = field(default_factory=zero)
    v1: SmoothFunction = field(default_factory=zero)

    def __post_init__(self):
        for name, fn in (("v0", self.v0), ("v1", self.v1)):
            for lo, hi in fn.intervals:
                if lo <= 0.0 <= hi:
                    raise ValueError(f"{name} window [{lo}, {hi}] contains the particle at s = 0")
        scale = max(1.0, self.v0.sup_norm(), self.v1.sup_norm())
        dscale = max(1.0, self.v0.derivative().sup_norm())
        if self.v0.max_jump(0) > 1e-9 * scale or self.v0.max_jump(1) > 1e-9 * dscale:
            raise ValueError("V0 must be C^1 on the real line")
        if self.v1.max_jump(0) > 1e-9 * scale:
            raise ValueError("V1 must be continuous on the real line")

    @property
    def is_zero(self) -> bool:
        return self.v0.is_zero and self.v1.is_zero

    @property
    def support(self) -> tuple[float, float] | None:
        sups = [s for s in (self.v0.support, self.v1.support) if s is not None]
        if not sups:
            return None
        return min(s[0] for s in sups), max(s[1] for s in sups)

    @property
    def breakpoints(self) -> list[float]:
        return sorted(set(self.v0.breakpoints) | set(self.v1.breakpoints))

    @classmethod
    def from_profiles(cls, F: SmoothFunction, G: SmoothFunction) -> RadiationPulse:
        """Realize given characteristic profiles: ``V0 = prim((F+G)/2)``, ``V1 = (F-G)/2``."""
        return cls(v0=(0.5 * (F + G)).primitive(), v1=0.5 * (F - G))

    def to_dict(self) -> dict:
        return {"v0": self.v0.to_dict(), "v1": self.v1.to_dict()}

    @classmethod
    def from_dict(cls, desc: dict) -> RadiationPulse:
        if "F" in desc or "G" in desc:
            F = function_from_dict(desc.get("F", {"kind": "zero"}))
            G = function_from_dict(desc.get("G", {"kind": "zero"}))
            return cls.from_profiles(F, G)
        return cls(
            v0=function_from_dict(desc.get("v0", {"kind": "zero"})),
            v1=function_from_dict(desc.get("v1", {"kind": "zero"})),
        )


def make_profiles(pulse: RadiationPulse) -> ProfilePair:
    dv0 = pulse.v0.derivative()
    return ProfilePair(F=dv0 + pulse.v1, G=dv0 - pulse.v1)


def static_pulse() -> RadiationPulse:
    return RadiationPulse()


def incoming_sine_pulse(beta: float, lo: float = -3.0, hi: float = -1.0) -> RadiationPulse:
    """Purely incoming radiation ``F = 0``, ``G = beta sin(pi x)`` on ``[lo, hi]``."""
    return RadiationPulse.from_profiles(zero(), sine_window(lo, hi, beta))


def bump_pulse(lo: float = 1.0, hi: float = 2.0, amplitude: float = 0.2) -> RadiationPulse:
    """``V0`` a sine bump, ``V1 = 0``; radiation arrives from both directions."""
    return RadiationPulse(v0=sine_bump(lo, hi, amplitude))


def smooth_pulse(amplitude: float = 0.1, order: int = 5) -> RadiationPulse:
    """``C^(order-1)`` pulse used for grid convergence: bumps in both ``V0`` and ``V1``."""
    return RadiationPulse(v0=poly_bump(1.0, 2.0, 2 * amplitude, order), v1=poly_bump(-3.0, -1.0, amplitude, order))


# ---------------------------------------------------------------------------
# Particle state
# ---------------------------------------------------------------------------


def theta_from_p(p, m: float):
    if m == 0:
        raise ValueError("m must be nonzero")
    return np.arctan(np.asarray(p, dtype=float) / m) if np.ndim(p) else math.atan(p / m)


def p_from_theta(theta, m: float):
    if m == 0:
        raise ValueError("m must be nonzero")
    if np.any(np.abs(theta) >= HALF_PI):
        raise LightSpeedError("|theta| = pi/2 is the light-speed limit: momentum is unbounded")
    return m * np.tan(theta) if np.ndim(theta) else m * math.tan(theta)


@dataclass(frozen=True)
class ParticleState:
    t: float
    q: float
    p: float
    theta: float

    @classmethod
    def from_theta(cls, t: float, q: float, theta: float, m: float) -> ParticleState:
        return cls(t, q, p_from_theta(theta, m), theta)

    @property
    def qdot(self) -> float:
        return math.sin(self.theta)


@dataclass(frozen=True)
class CharacteristicState:
    """Autonomous-system state with ``d = q + t`` and ``b = q - t``."""

    t: float
    d: float
    b: float
    theta: float

    @classmethod
    def from_particle(cls, t: float, q: float, theta: float) -> CharacteristicState:
        return cls(t, q + t, q - t, theta)

    @classmethod
    def initial(cls) -> CharacteristicState:
        return cls(0.0, 0.0, 0.0, 0.0)

    @property
    def q(self) -> float:
        return 0.5 * (self.d + self.b)

    @property
    def qdot(self) -> float:
        return math.sin(self.theta)

    def time_mismatch(self) -> float:
        return abs(0.5 * (self.d - self.b) - self.t)
