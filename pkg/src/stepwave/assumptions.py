"""Certification of the breather-existence hypotheses.

(A1)/(A2) are structural for step potentials. (A3) combines exact
commensurability arithmetic (gcd/parity of the optical half-lengths
q_i = sqrt(a_i) * cell length, and the alternating product alpha) with a
numerical distance scan; an exact certificate extends the scan to all odd
temporal modes by sqrt(lambda)-periodicity of the monodromy trace. (A4) is
certified structurally: empty point spectrum for periodic potentials,
periodic repetition of gap-eigenvalue counts otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

import numpy as np

from .potential import PerturbedPeriodicPotential, rational_sqrt
from .spectrum import (BandStructure, GapEigenvalue, band_scan,
                       eigenvalue_window_counts, gap_eigenvalues)

FLOAT_TOL = 1e-9


class NotApplicableError(ValueError):
    """Criterion undefined for this input (e.g. incommensurable cells)."""


def exact_q_values(pot: PerturbedPeriodicPotential, side: str = "plus") -> list[Fraction] | None:
    """All q_i as exact Fractions, or None if any sqrt(a_i) is irrational."""
    qs = pot.cell_q_values(side)
    if all(isinstance(q, Fraction) for q in qs):
        return list(qs)
    return None


def fraction_gcd(qs: list[Fraction]) -> Fraction:
    """Largest q with all q_i integer multiples of q."""
    den = 1
    for q in qs:
        den = den * q.denominator // gcd(den, q.denominator)
    nums = [q.numerator * (den // q.denominator) for q in qs]
    g = 0
    for n in nums:
        g = gcd(g, n)
    return Fraction(g, den)


@dataclass(frozen=True)
class MultistepCheck:
    passed: bool
    applicable: bool
    certified: bool               # exact arithmetic (vs float fallback)
    alpha: Fraction | float | None
    odd_indices: tuple[int, ...]  # 1-based cells with 4 q_i in T N_odd
    q_values: tuple
    reason: str


def check_multistep(pot: PerturbedPeriodicPotential, T) -> MultistepCheck:
    """Multi-step criterion at period T: 4 q_i in T*N for all i, the set
    {i : 4 q_i in T*N_odd} has even cardinality >= 2, and the alternating
    value ratio alpha != 1."""
    if not pot.is_periodic:
        raise NotApplicableError("multi-step criterion applies to periodic potentials")
    Tf = Fraction(T) if not isinstance(T, float) else None
    qs_exact = exact_q_values(pot)
    values = [v for _, _, v in pot.right_tail.cells()]

    if qs_exact is not None and Tf is not None:
        ratios = [4 * q / Tf for q in qs_exact]
        if any(r.denominator != 1 for r in ratios):
            return MultistepCheck(False, False, True, None, (), tuple(qs_exact),
                                  "4 q_i / T not all integers")
        odd = tuple(i + 1 for i, r in enumerate(ratios) if r.numerator % 2 == 1)
        return _finish_multistep(odd, values, tuple(qs_exact), certified=True)

    # float fallback, reported uncertified
    qs = [float(q) for q in pot.cell_q_values()]
    Tfl = float(T)
    ratios = [4 * q / Tfl for q in qs]
    if any(abs(r - round(r)) > FLOAT_TOL for r in ratios):
        return MultistepCheck(False, False, False, None, (), tuple(qs),
                              "4 q_i / T not integers (within 1e-9)")
    odd = tuple(i + 1 for i, r in enumerate(ratios) if round(r) % 2 == 1)
    return _finish_multistep(odd, values, tuple(qs), certified=False)


def _finish_multistep(odd: tuple[int, ...], values, q_values, certified: bool) -> MultistepCheck:
    if len(odd) % 2 == 1:
        return MultistepCheck(False, True, certified, None, odd, q_values,
                              f"odd count of odd-parity cells: {len(odd)}")
    if len(odd) == 0:
        return MultistepCheck(False, True, certified, None, odd, q_values,
                              "no odd-parity cells (trace = +-2 at resonances)")
    num = Fraction(1)
    den = Fraction(1)
    for pos, i in enumerate(odd):
        if pos % 2 == 0:
            num *= values[i - 1]
        else:
            den *= values[i - 1]
    alpha = num / den
    if alpha == 1:
        return MultistepCheck(False, True, certified, alpha, odd, q_values,
                              "alpha = 1")
    return MultistepCheck(True, True, certified, alpha, odd, q_values, "")


@dataclass(frozen=True)
class AdmissiblePeriods:
    applicable: bool
    passed: bool
    certified: bool
    q: Fraction | float | None       # gcd of the q_i
    alpha: Fraction | float | None
    odd_indices: tuple[int, ...]
    description: str

    def periods(self, k_values=(1, 3, 5, 7)) -> list:
        if self.q is None:
            return []
        return [4 * self.q / k for k in k_values]


def admissible_periods(pot: PerturbedPeriodicPotential) -> AdmissiblePeriods:
    """The admissible period set {4 q / k : k odd} with q = gcd(q_1..q_N),
    plus the parity/alpha verdict that makes those periods valid."""
    if not pot.is_periodic:
        raise NotApplicableError("admissible periods apply to periodic potentials")
    values = [v for _, _, v in pot.right_tail.cells()]
    qs_exact = exact_q_values(pot)
    if qs_exact is not None:
        q = fraction_gcd(qs_exact)
        ratios = [qi / q for qi in qs_exact]
        odd = tuple(i + 1 for i, r in enumerate(ratios) if r.numerator % 2 == 1)
        chk = _finish_multistep(odd, values, tuple(qs_exact), certified=True)
        desc = (f"T in {{4q/k : k odd}} with q = {q}" if chk.passed
                else f"none ({chk.reason})")
        return AdmissiblePeriods(True, chk.passed, True, q, chk.alpha, odd, desc)

    # float fallback: rationalize pairwise ratios
    qs = [float(q) for q in pot.cell_q_values()]
    fracs = []
    for qi in qs:
        fr = Fraction(qi / qs[0]).limit_denominator(10**6)
        if abs(float(fr) - qi / qs[0]) > FLOAT_TOL:
            return AdmissiblePeriods(False, False, False, None, None, (),
                                     "incommensurable q_i (within 1e-9)")
        fracs.append(fr)
    qrel = fraction_gcd(fracs)
    q = float(qrel) * qs[0]
    ratios = [fr / qrel for fr in fracs]
    odd = tuple(i + 1 for i, r in enumerate(ratios) if r.numerator % 2 == 1)
    chk = _finish_multistep(odd, values, tuple(qs), certified=False)
    desc = (f"T in {{4q/k : k odd}} with q ~= {q} (uncertified)" if chk.passed
            else f"none ({chk.reason})")
    return AdmissiblePeriods(True, chk.passed, False, q, chk.alpha, odd, desc)


@dataclass(frozen=True)
class DislocationCheck:
    passed: bool
    base_check: MultistepCheck
    q0: Fraction | float | None
    reason: str


def check_dislocation(pot: PerturbedPeriodicPotential, T) -> DislocationCheck:
    """Dislocation criterion: base passes the multi-step check at T and
    4 q_0 in T*N_even with q_0 = sqrt(V0) * d."""
    core = pot.core
    if core is None or len(core.values) != 1 or pot.left_tail != pot.right_tail:
        raise NotApplicableError("potential is not a single-insert dislocation")
    from .potential import make_periodic
    base = PerturbedPeriodicPotential(
        left_tail=pot.left_tail, right_tail=pot.left_tail, core=None,
        r_minus=Fraction(0), r_plus=Fraction(0))
    base_chk = check_multistep(base, T)
    v0 = core.values[0]
    d = pot.r_plus - pot.r_minus
    sq = rational_sqrt(v0)
    if sq is not None and not isinstance(T, float):
        q0 = sq * d
        ratio = 4 * q0 / Fraction(T)
        if ratio.denominator != 1:
            return DislocationCheck(False, base_chk, q0, "4 q0 / T not an integer")
        if ratio.numerator % 2 == 1:
            return DislocationCheck(False, base_chk, q0, "4 q0 in T*N_odd")
        ok = base_chk.passed
        return DislocationCheck(ok, base_chk, q0,
                                "" if ok else "base potential fails multi-step check")
    q0 = float(v0) ** 0.5 * float(d)
    ratio = 4 * q0 / float(T)
    if abs(ratio - round(ratio)) > FLOAT_TOL or round(ratio) % 2 == 1:
        return DislocationCheck(False, base_chk, q0,
                                "4 q0 not in T*N_even (float, within 1e-9)")
    return DislocationCheck(base_chk.passed, base_chk, q0,
                            "" if base_chk.passed else "base potential fails multi-step check")


@dataclass(frozen=True)
class InterfaceCheck:
    passed: bool
    left_check: MultistepCheck
    right_check: MultistepCheck
    reason: str

    @property
    def alpha_minus(self):
        return self.left_check.alpha

    @property
    def alpha_plus(self):
        return self.right_check.alpha


def check_interface(left: PerturbedPeriodicPotential,
                    right: PerturbedPeriodicPotential, T) -> InterfaceCheck:
    """Interface criterion: both halves pass the multi-step check at the same
    T and alpha+, alpha- lie strictly on the same side of 1."""
    lc = check_multistep(left, T)
    rc = check_multistep(right, T)
    if not (lc.applicable and rc.applicable):
        raise NotApplicableError("a half fails applicability of the multi-step check")
    if not (lc.passed and rc.passed):
        return InterfaceCheck(False, lc, rc, "a half fails the multi-step check")
    am, ap = lc.alpha, rc.alpha
    same_side = (am > 1 and ap > 1) or (am < 1 and ap < 1)
    return InterfaceCheck(same_side, lc, rc,
                          "" if same_side else "alpha+ and alpha- straddle 1")


@dataclass(frozen=True)
class A3Result:
    omega: float
    T: float
    delta: float                   # inf |sqrt(lam) - k omega| over scan
    passed: bool
    certification: str             # "exact-periodicity" | "numeric-scan"
    k_checked: tuple[int, ...]
    offending: tuple[int, float] | None   # (k, band position) when delta ~ 0


def verify_a3_numeric(pot: PerturbedPeriodicPotential, omega: float,
                      band_structures: tuple[BandStructure, BandStructure],
                      k_max: int,
                      point_eigenvalues: list[GapEigenvalue] | None = None,
                      exact_certificate: bool = False,
                      tol: float = 1e-12) -> A3Result:
    """delta = min over odd k <= k_max of dist(k omega, sqrt(sigma(L))).

    With the exact-periodicity certificate the distance pattern repeats in
    sqrt(lambda) with period 4 omega, extending the verdict to all odd k.
    """
    bs_p, bs_m = band_structures
    ks = tuple(range(1, k_max + 1, 2))
    need = (k_max * omega) ** 2
    if min(bs_p.lambda_max, bs_m.lambda_max) < need:
        raise ValueError("band structures do not cover (k_max * omega)^2")
    delta = np.inf
    offending = None
    for k in ks:
        s = k * omega
        d = min(bs_p.band_distance_sqrt(s), bs_m.band_distance_sqrt(s))
        for ev in (point_eigenvalues or []):
            d = min(d, abs(s - np.sqrt(ev.lam)))
        if d < delta:
            delta = d
            offending = (k, s)
    passed = delta > tol
    cert = "exact-periodicity" if (exact_certificate and passed) else "numeric-scan"
    return A3Result(omega=omega, T=2 * np.pi / omega, delta=float(delta),
                    passed=passed, certification=cert, k_checked=ks,
                    offending=None if passed else offending)


def embedding_series_estimate(band_structures: tuple[BandStructure, BandStructure],
                              point_eigenvalues: list[GapEigenvalue],
                              omega: float, p: float,
                              k_trunc: int = 41, cap: float = 1e12) -> float:
    """Truncated embedding-condition series with analytic band tail.

    Sums dist(k^2 omega^2, I_n^+-)^(-s) + |k^2 omega^2 - lam|^(-s) over odd
    temporal modes (s = p/(p-2)); bands beyond the scanned range enter
    through the lower eigenvalue bound lam_j >= (pi floor(j/2) / X)^2 / max V.
    Returns inf (fail) if a distance vanishes or the value exceeds the cap.
    """
    if p <= 2:
        raise ValueError("embedding series needs p > 2")
    s_exp = p / (p - 2.0)
    bs_p, bs_m = band_structures
    total = 0.0
    for k in range(1, k_trunc + 1, 2):
        nu = (k * omega) ** 2
        for bs in (bs_p, bs_m):
            for lo, hi in bs.bands:
                d = 0.0 if lo <= nu <= hi else min(abs(nu - lo), abs(nu - hi))
                if d == 0.0:
                    return np.inf
                total += d ** (-s_exp)
            total += _band_tail(bs, nu, s_exp)
        for ev in point_eigenvalues:
            d = abs(nu - ev.lam)
            if d == 0.0:
                return np.inf
            total += d ** (-s_exp)
        if total > cap:
            return np.inf
    return total


def _band_tail(bs: BandStructure, nu: float, s_exp: float) -> float:
    """Tail over bands above the scan, via the periodic-problem eigenvalue
    lower bound lam_j >= (pi * floor(j/2) / X)^2 / max V (two band edges per
    floor(j/2) value)."""
    X, vmax = bs.tail_period, bs.tail_vmax
    lam_of = lambda m: (np.pi * m / X) ** 2 / vmax
    m = 1
    while lam_of(m) <= bs.lambda_max:
        m += 1
    if lam_of(m) <= nu:
        raise ValueError("scan range too small for the requested k truncation")
    total = 0.0
    while True:
        term = 2.0 * (lam_of(m) - nu) ** (-s_exp)
        total += term
        if term < 1e-16 * max(total, 1.0):
            return total
        m += 1
        if m > 10**7:
            return total


@dataclass(frozen=True)
class A4Result:
    passed: bool
    kind: str                      # "periodic-empty" | "repetition" | "numeric-only"
    eigenvalues_first_window: tuple[float, ...]
    window_counts: tuple[int, ...]
    note: str = ""


def classify_potential(pot: PerturbedPeriodicPotential) -> str:
    if pot.is_periodic:
        return "periodic"
    if (pot.core is not None and len(pot.core.values) == 1
            and pot.left_tail == pot.right_tail and pot.r_minus == 0):
        return "dislocation"
    if pot.r_minus == pot.r_plus and pot.left_tail != pot.right_tail:
        return "interface"
    return "general"


def verify_a4(pot: PerturbedPeriodicPotential, omega: float,
              eigenvalues: list[GapEigenvalue],
              exact_certificate: bool, n_windows: int = 3) -> A4Result:
    """(A4): point spectrum empty (periodic case) or repeating per
    sqrt(lambda)-window of length 4 omega, which gives at least quadratic
    growth."""
    if pot.is_periodic:
        return A4Result(True, "periodic-empty", (), (),
                        "periodic step potentials have empty point spectrum")
    counts = tuple(eigenvalue_window_counts(eigenvalues, omega, n_windows))
    first = tuple(ev.lam for ev in eigenvalues
                  if np.sqrt(ev.lam) < 4 * omega)
    equal = len(set(counts)) == 1
    if equal and exact_certificate:
        return A4Result(True, "repetition", first, counts)
    if equal:
        return A4Result(True, "numeric-only", first, counts,
                        "counts match but no exact periodicity certificate")
    return A4Result(False, "numeric-only", first, counts,
                    "eigenvalue counts differ across windows")


@dataclass(frozen=True)
class AssumptionReport:
    """Full certification report for one potential and one period T."""

    kind: str
    a1_ok: bool
    a2_ok: bool
    exact_check: MultistepCheck | DislocationCheck | InterfaceCheck | None
    admissible: AdmissiblePeriods | None
    a3: A3Result
    a4: A4Result
    embedding_bound: float | None
    eigenvalues: tuple[float, ...]
    passed: bool

    def to_dict(self) -> dict:
        ex = self.exact_check
        exact = None
        if isinstance(ex, MultistepCheck):
            exact = {"type": "multistep", "passed": ex.passed,
                     "certified": ex.certified,
                     "alpha": _num(ex.alpha), "odd_indices": list(ex.odd_indices),
                     "q": [_num(q) for q in ex.q_values], "reason": ex.reason}
        elif isinstance(ex, DislocationCheck):
            exact = {"type": "dislocation", "passed": ex.passed,
                     "q0": _num(ex.q0), "reason": ex.reason,
                     "base": {"passed": ex.base_check.passed,
                              "alpha": _num(ex.base_check.alpha)}}
        elif isinstance(ex, InterfaceCheck):
            exact = {"type": "interface", "passed": ex.passed,
                     "alpha_plus": _num(ex.alpha_plus),
                     "alpha_minus": _num(ex.alpha_minus), "reason": ex.reason}
        return {
            "kind": self.kind,
            "a1_ok": self.a1_ok,
            "a2_ok": self.a2_ok,
            "exact_check": exact,
            "admissible_T": self.admissible.description if self.admissible else None,
            "a3": {"omega": self.a3.omega, "T": self.a3.T,
                   "delta": self.a3.delta, "passed": self.a3.passed,
                   "certification": self.a3.certification,
                   "k_checked": list(self.a3.k_checked)},
            "a4": {"passed": self.a4.passed, "kind": self.a4.kind,
                   "window_counts": list(self.a4.window_counts),
                   "first_window_eigenvalues": list(self.a4.eigenvalues_first_window),
                   "note": self.a4.note},
            "embedding_bound": self.embedding_bound,
            "point_eigenvalues": list(self.eigenvalues),
            "passed": self.passed,
        }


def _num(x):
    if x is None:
        return None
    if isinstance(x, Fraction):
        return str(x)
    return float(x)


def check_assumptions(pot: PerturbedPeriodicPotential, T=None, omega: float | None = None,
                      k_max: int = 9, p: float | None = None,
                      lambda_max: float | None = None) -> AssumptionReport:
    """Run every applicable certification for (pot, T) and collect a report.

    Exactly one of T, omega must be given; pass T as int/str/Fraction for
    exact-arithmetic certification.
    """
    if (T is None) == (omega is None):
        raise ValueError("give exactly one of T, omega")
    if T is None:
        T = 2 * np.pi / omega
    else:
        omega = 2 * np.pi / float(Fraction(T) if not isinstance(T, float) else T)
    kind = classify_potential(pot)

    a1_ok = (min(pot.left_tail.values) > 0 and min(pot.right_tail.values) > 0
             and (pot.core is None or min(pot.core.values) > 0))
    a2_ok = True  # periodic tails by construction

    exact_check = None
    admissible = None
    try:
        if kind == "periodic":
            exact_check = check_multistep(pot, T)
            admissible = admissible_periods(pot)
        elif kind == "dislocation":
            exact_check = check_dislocation(pot, T)
        elif kind == "interface":
            left = PerturbedPeriodicPotential(
                left_tail=pot.left_tail, right_tail=pot.left_tail, core=None,
                r_minus=Fraction(0), r_plus=Fraction(0))
            right = PerturbedPeriodicPotential(
                left_tail=pot.right_tail, right_tail=pot.right_tail, core=None,
                r_minus=Fraction(0), r_plus=Fraction(0))
            exact_check = check_interface(left, right, T)
    except NotApplicableError:
        exact_check = None

    if lambda_max is None:
        lambda_max = (k_max * omega + 4 * omega) ** 2
    bs_p = band_scan(pot, "plus", lambda_max)
    bs_m = bs_p if pot.is_periodic else band_scan(pot, "minus", lambda_max)
    eigs = [] if kind == "periodic" else gap_eigenvalues(pot, bs_p, bs_m)

    certificate = bool(exact_check is not None and exact_check.passed
                       and getattr(exact_check, "certified", True))
    a3 = verify_a3_numeric(pot, omega, (bs_p, bs_m), k_max,
                           point_eigenvalues=eigs, exact_certificate=certificate)
    a4 = verify_a4(pot, omega, eigs, exact_certificate=certificate)

    bound = None
    if p is not None and p > 2:
        k_trunc = max(1, int(np.sqrt(0.8 * lambda_max) / omega))
        k_trunc -= 1 - k_trunc % 2   # make odd
        bound = embedding_series_estimate((bs_p, bs_m), eigs, omega, p,
                                          k_trunc=k_trunc)
        bound = None if not np.isfinite(bound) else float(bound)

    passed = bool(a1_ok and a2_ok and a3.passed and a4.passed)
    return AssumptionReport(kind=kind, a1_ok=a1_ok, a2_ok=a2_ok,
                            exact_check=exact_check, admissible=admissible,
                            a3=a3, a4=a4, embedding_bound=bound,
                            eigenvalues=tuple(ev.lam for ev in eigs),
                            passed=passed)
