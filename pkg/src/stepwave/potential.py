"""Piecewise-constant perturbed-periodic coefficient profiles.

The weight V (and the nonlinearity weight Gamma) are represented as step
functions: a core profile on a finite window flanked by two periodic tails.
Cell boundaries and cell values are kept as exact `Fraction`s so that the
commensurability arithmetic used by the admissibility checks never suffers
float drift.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import floor
from numbers import Rational
from typing import Iterator, Sequence, Union

Number = Union[int, float, str, Fraction]


class InvalidProfileError(ValueError):
    """Raised when a step profile violates positivity or ordering."""


def as_fraction(x: Number) -> Fraction:
    """Convert a user-supplied number to an exact Fraction.

    Strings like "1/3" are parsed exactly; floats are converted via their
    exact binary value (adequate for breakpoints, since the same float
    round-trips deterministically).
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, Rational):
        return Fraction(x)
    # exact binary value; users wanting exact thirds etc. pass "1/3"
    return Fraction(x)


@dataclass(frozen=True)
class StepProfile:
    """A step function on [breakpoints[0], breakpoints[-1]).

    ``values[i]`` holds on the half-open cell [breakpoints[i], breakpoints[i+1]).
    All values are required positive unless ``allow_zero`` was used at
    construction (needed for compactly supported nonlinearity weights).
    """

    breakpoints: tuple[Fraction, ...]
    values: tuple[Fraction, ...]

    @staticmethod
    def from_cells(breakpoints: Sequence[Number], values: Sequence[Number],
                   allow_zero: bool = False) -> "StepProfile":
        bps = tuple(as_fraction(b) for b in breakpoints)
        vals = tuple(as_fraction(v) for v in values)
        if len(bps) != len(vals) + 1:
            raise InvalidProfileError("need len(breakpoints) == len(values) + 1")
        if any(b1 <= b0 for b0, b1 in zip(bps, bps[1:])):
            raise InvalidProfileError("breakpoints must be strictly increasing")
        for v in vals:
            if v < 0 or (not allow_zero and v <= 0):
                raise InvalidProfileError("cell values must be positive")
        return StepProfile(bps, vals)

    @property
    def width(self) -> Fraction:
        return self.breakpoints[-1] - self.breakpoints[0]

    @property
    def start(self) -> Fraction:
        return self.breakpoints[0]

    def value_at(self, x: float) -> float:
        """Evaluate at x inside [start, start+width); raises outside."""
        if not (float(self.start) <= x < float(self.breakpoints[-1])):
            raise ValueError(f"x={x} outside profile window")
        # half-open cells: rightmost breakpoint <= x
        for b, v in zip(reversed(self.breakpoints[:-1]), reversed(self.values)):
            if float(b) <= x:
                return float(v)
        return float(self.values[0])

    def cells(self) -> Iterator[tuple[Fraction, Fraction, Fraction]]:
        for b0, b1, v in zip(self.breakpoints, self.breakpoints[1:], self.values):
            yield b0, b1, v


@dataclass(frozen=True)
class PerturbedPeriodicPotential:
    """Weight function with periodic tails and a step core.

        V(x) = left_tail((x - r_minus) mod X-)   for x < r_minus
        V(x) = core(x)                           for r_minus <= x < r_plus
        V(x) = right_tail((x - r_plus) mod X+)   for x >= r_plus

    Tails are stored as one period anchored at 0; replication of cells keeps
    tail evaluation bit-exact under shifts by whole periods.
    """

    left_tail: StepProfile
    right_tail: StepProfile
    core: StepProfile | None
    r_minus: Fraction
    r_plus: Fraction

    def __post_init__(self):
        if self.r_minus > self.r_plus:
            raise InvalidProfileError("need r_minus <= r_plus")
        if self.core is None:
            if self.r_minus != self.r_plus:
                raise InvalidProfileError("core required when r_minus < r_plus")
        else:
            if (self.core.start, self.core.breakpoints[-1]) != (self.r_minus, self.r_plus):
                raise InvalidProfileError("core must cover exactly [r_minus, r_plus)")
        for tail in (self.left_tail, self.right_tail):
            if tail.start != 0:
                raise InvalidProfileError("tails must be anchored at 0")

    @property
    def period_minus(self) -> Fraction:
        return self.left_tail.width

    @property
    def period_plus(self) -> Fraction:
        return self.right_tail.width

    @property
    def is_periodic(self) -> bool:
        return (self.r_minus == self.r_plus and self.left_tail == self.right_tail)

    def __call__(self, x: float) -> float:
        rm, rp = float(self.r_minus), float(self.r_plus)
        if x < rm:
            X = self.period_minus
            n = floor((x - rm) / float(X))
            # exact whole-period shift, then local lookup
            local = x - rm - n * float(X)
            if local >= float(X):  # rounding at the seam
                local -= float(X)
            return self.left_tail.value_at(max(local, 0.0))
        if x >= rp or self.core is None:
            X = self.period_plus
            n = floor((x - rp) / float(X))
            local = x - rp - n * float(X)
            if local >= float(X):
                local -= float(X)
            return self.right_tail.value_at(max(local, 0.0))
        return self.core.value_at(x)

    def cells_between(self, x0: float, x1: float) -> list[tuple[float, float, float]]:
        """Constant-value cells covering [x0, x1], x0 < x1.

        Returns (start, end, value) triples with start/end floats derived from
        the exact breakpoint lattice.
        """
        if not x1 > x0:
            raise ValueError("need x1 > x0")
        pts = [x0] + [float(b) for b in self.breakpoints_in(x0, x1)] + [x1]
        out = []
        for a, b in zip(pts, pts[1:]):
            if b - a <= 0:
                continue
            mid = 0.5 * (a + b)
            out.append((a, b, self(mid)))
        return out

    def breakpoints_in(self, x0: float, x1: float) -> list[Fraction]:
        """Exact jump-candidate positions strictly inside (x0, x1)."""
        pts: set[Fraction] = set()

        def add_tail(tail: StepProfile, anchor: Fraction, lo: float, hi: float):
            X = tail.width
            if hi <= lo:
                return
            n0 = floor((lo - float(anchor)) / float(X)) - 1
            n1 = floor((hi - float(anchor)) / float(X)) + 1
            for n in range(n0, n1 + 1):
                base = anchor + n * X
                for b in tail.breakpoints[:-1]:
                    p = base + b
                    if x0 < float(p) < x1:
                        pts.add(p)

        rm, rp = float(self.r_minus), float(self.r_plus)
        add_tail(self.left_tail, self.r_minus, x0, min(x1, rm))
        add_tail(self.right_tail, self.r_plus, max(x0, rp), x1)
        if self.core is not None:
            for b in self.core.breakpoints:
                if x0 < float(b) < x1:
                    pts.add(b)
        else:
            if x0 < rp < x1:
                pts.add(self.r_plus)
        return sorted(pts)

    def jumps_in(self, x0: float, x1: float) -> list[tuple[float, float]]:
        """Actual discontinuities (position, jump height) inside (x0, x1)."""
        eps_scale = 1e-9
        out = []
        for p in self.breakpoints_in(x0, x1):
            fp = float(p)
            h = max(abs(fp), 1.0) * eps_scale
            dv = self(fp + h) - self(fp - h)
            if dv != 0.0:
                out.append((fp, dv))
        return out

    def total_variation(self, x0: float, x1: float) -> float:
        return sum(abs(dv) for _, dv in self.jumps_in(x0, x1))

    def cell_q_values(self, side: str = "plus") -> list[Fraction | float]:
        """q_i = sqrt(a_i) * cell length for one tail period.

        Exact Fractions where sqrt(a_i) is rational, floats otherwise.
        """
        tail = self.right_tail if side == "plus" else self.left_tail
        out: list[Fraction | float] = []
        for b0, b1, v in tail.cells():
            r = rational_sqrt(v)
            ell = b1 - b0
            out.append(r * ell if r is not None else float(v) ** 0.5 * float(ell))
        return out


def rational_sqrt(v: Fraction) -> Fraction | None:
    """sqrt(v) as an exact Fraction, or None if irrational."""
    from math import isqrt

    if v < 0:
        return None
    pn, pd = isqrt(v.numerator), isqrt(v.denominator)
    if pn * pn == v.numerator and pd * pd == v.denominator:
        return Fraction(pn, pd)
    return None


def make_periodic(steps: Sequence[tuple[Number, Number]], X: Number) -> PerturbedPeriodicPotential:
    """Purely periodic step potential from (length-fraction, value) pairs.

    The fractions must sum to 1; values must be positive. Cell boundaries are
    stored as exact rationals times X.
    """
    Xf = as_fraction(X)
    if Xf <= 0:
        raise InvalidProfileError("period X must be positive")
    fracs = [as_fraction(f) for f, _ in steps]
    vals = [as_fraction(v) for _, v in steps]
    if any(f <= 0 for f in fracs):
        raise InvalidProfileError("zero-length cell")
    if sum(fracs) != 1:
        raise InvalidProfileError(f"length fractions must sum to 1, got {sum(fracs)}")
    bps = [Fraction(0)]
    for f in fracs:
        bps.append(bps[-1] + f * Xf)
    profile = StepProfile.from_cells(bps, vals)
    return PerturbedPeriodicPotential(
        left_tail=profile, right_tail=profile, core=None,
        r_minus=Fraction(0), r_plus=Fraction(0))


def make_dislocation(base: PerturbedPeriodicPotential, V0: Number, d: Number) -> PerturbedPeriodicPotential:
    """Periodic potential interrupted by a constant insert of value V0 on [0, d)."""
    if not base.is_periodic:
        raise InvalidProfileError("dislocation base must be purely periodic")
    V0f, df = as_fraction(V0), as_fraction(d)
    if V0f <= 0 or df <= 0:
        raise InvalidProfileError("need V0 > 0 and d > 0")
    core = StepProfile.from_cells([Fraction(0), df], [V0f])
    return PerturbedPeriodicPotential(
        left_tail=base.right_tail, right_tail=base.right_tail, core=core,
        r_minus=Fraction(0), r_plus=df)


def make_interface(left: PerturbedPeriodicPotential,
                   right: PerturbedPeriodicPotential) -> PerturbedPeriodicPotential:
    """Two periodic half-line potentials joined at 0."""
    if not (left.is_periodic and right.is_periodic):
        raise InvalidProfileError("interface halves must be purely periodic")
    return PerturbedPeriodicPotential(
        left_tail=left.left_tail, right_tail=right.right_tail, core=None,
        r_minus=Fraction(0), r_plus=Fraction(0))


@dataclass(frozen=True)
class NonlinearityProfile:
    """Nonlinearity weight Gamma.

    mode "compact": a step bump, zero outside its window.
    mode "asymptotically-periodic": positive periodic part plus a
    nonnegative compactly supported step part.
    """

    mode: str
    bump: StepProfile | None = None
    periodic: PerturbedPeriodicPotential | None = None
    localized: StepProfile | None = None

    def __post_init__(self):
        if self.mode == "compact":
            if self.bump is None:
                raise InvalidProfileError("compact mode needs a bump profile")
            if all(v == 0 for v in self.bump.values):
                raise InvalidProfileError("bump must not vanish identically")
        elif self.mode == "asymptotically-periodic":
            if self.periodic is None:
                raise InvalidProfileError("asymptotically-periodic mode needs a periodic part")
            if self.localized is not None and any(v < 0 for v in self.localized.values):
                raise InvalidProfileError("localized part must be nonnegative")
        else:
            raise InvalidProfileError(f"unknown gamma mode {self.mode!r}")

    def __call__(self, x: float) -> float:
        if self.mode == "compact":
            bump = self.bump
            if float(bump.start) <= x < float(bump.breakpoints[-1]):
                return bump.value_at(x)
            return 0.0
        val = self.periodic(x)
        loc = self.localized
        if loc is not None and float(loc.start) <= x < float(loc.breakpoints[-1]):
            val += loc.value_at(x)
        return val


def compact_gamma(breakpoints: Sequence[Number], values: Sequence[Number]) -> NonlinearityProfile:
    bump = StepProfile.from_cells(breakpoints, values, allow_zero=True)
    return NonlinearityProfile(mode="compact", bump=bump)


# -- config loading ----------------------------------------------------------
#
# Potentials in config files are nested dicts with exactly one of the keys
# "periodic", "dislocation", "interface":
#   {"periodic": {"steps": [[frac, value], ...], "X": number}}
#   {"dislocation": {"base": {<periodic>}, "V0": number, "d": number}}
#   {"interface": {"left": {<periodic>}, "right": {<periodic>}}}
# Numbers may be given as strings "p/q" for exact rational input.

def potential_from_config(cfg: dict) -> PerturbedPeriodicPotential:
    keys = set(cfg) & {"periodic", "dislocation", "interface"}
    if len(keys) != 1:
        raise InvalidProfileError(
            "potential config needs exactly one of periodic/dislocation/interface")
    (kind,) = keys
    body = cfg[kind]
    if kind == "periodic":
        return make_periodic([(f, v) for f, v in body["steps"]], body["X"])
    if kind == "dislocation":
        base = potential_from_config({"periodic": body["base"]}
                                     if "steps" in body.get("base", {}) else body["base"])
        return make_dislocation(base, body["V0"], body["d"])
    left = potential_from_config(body["left"])
    right = potential_from_config(body["right"])
    return make_interface(left, right)


def gamma_from_config(cfg: dict) -> NonlinearityProfile:
    mode = cfg.get("mode", "compact")
    if mode == "compact":
        bps = cfg["breakpoints"]
        return compact_gamma(bps, cfg["values"])
    periodic = potential_from_config(cfg["periodic"])
    loc = None
    if cfg.get("loc"):
        loc = StepProfile.from_cells(cfg["loc"]["breakpoints"], cfg["loc"]["values"],
                                     allow_zero=True)
    return NonlinearityProfile(mode="asymptotically-periodic", periodic=periodic, localized=loc)
