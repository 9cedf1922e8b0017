"""Closed-form secure file rate bounds and sweep tables.

All arithmetic is exact over rationals; floating point appears only at
serialization, so equality-style invariants can be asserted tightly.
The tapped ratio alpha lives in (0, 2]; alpha = 0 (no adversary) is
deliberately out of scope and rejected.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import AlphaOutOfRange, BadD

HALF = Fraction(1, 2)


def _as_alpha(alpha, upper: Fraction = Fraction(2)) -> Fraction:
    a = Fraction(alpha)
    if not 0 < a <= upper:
        raise AlphaOutOfRange(f"alpha={alpha} outside (0, {upper}]")
    return a


def _check_d(D: int, minimum: int = 2) -> int:
    if int(D) != D or D < minimum:
        raise BadD(f"D={D} must be an integer >= {minimum}")
    return int(D)


def capacity_d2(alpha) -> Fraction:
    """Exact best secure rate for a two-file library: 1 - alpha/2."""
    a = _as_alpha(alpha)
    return 1 - a / 2


def lower_bound(alpha, D) -> Fraction:
    """Best known achievable secure rate."""
    a = _as_alpha(alpha)
    D = _check_d(D)
    if a >= 1:
        return 1 - a / 2
    if D == 2:
        return capacity_d2(a)
    return HALF + Fraction(3, 4 * D) * (1 - a)


def upper_bound(alpha, D) -> Fraction:
    """Best known converse bound on the secure rate."""
    a = _as_alpha(alpha)
    D = _check_d(D)
    if a >= 1:
        return 1 - a / 2
    if D == 2:
        return capacity_d2(a)
    return HALF + Fraction(2 * D - 1, 2 * D * (D - 1)) * (1 - a)


def chain_scheme_rate(alpha, D) -> Fraction:
    """Rate of the chained-XOR placement scheme; optimal only at D=3."""
    a = _as_alpha(alpha, upper=Fraction(1))
    if a == 1:
        raise AlphaOutOfRange(f"alpha={alpha} outside (0, 1)")
    D = _check_d(D, minimum=3)
    return HALF + Fraction(1, 2 * (D - 1)) * (1 - a)


def uncoded_placement_bound(alpha, D) -> Fraction:
    """Converse bound when caches store plain file bits only."""
    a = _as_alpha(alpha, upper=Fraction(1))
    if a == 1:
        raise AlphaOutOfRange(f"alpha={alpha} outside (0, 1)")
    D = _check_d(D, minimum=3)
    return HALF + Fraction(1, D) * (1 - a)


@dataclass(frozen=True)
class AllocationResult:
    """Optimal cache split between data (M_D) and key (M_K) fractions."""

    m_d: Fraction
    m_k: Fraction
    value: Fraction


def single_receiver_bound(alpha, D, m_k) -> Fraction:
    """Converse bound when a fraction m_k of each cache stores key bits."""
    a = _as_alpha(alpha, upper=Fraction(1))
    if a == 1:
        raise AlphaOutOfRange(f"alpha={alpha} outside (0, 1)")
    D = _check_d(D, minimum=3)
    mk = Fraction(m_k)
    if not 0 <= mk <= 1:
        raise AlphaOutOfRange(f"m_k={m_k} outside [0, 1]")
    return HALF * (min(Fraction(1), 1 - a + mk) + Fraction(2 * D - 1, D * (D - 1)) * (1 - mk))


def optimize_allocation(alpha, D) -> AllocationResult:
    """Maximize the single-receiver bound over the cache split.

    The objective is piecewise linear in m_k: increasing with slope
    (1 - c)/2 below the breakpoint m_k = alpha (where the min saturates)
    and decreasing with slope -c/2 above it, c = (2D-1)/(D(D-1)) < 1
    for D >= 3.  The maximum is therefore exactly at m_k = alpha.
    """
    a = _as_alpha(alpha, upper=Fraction(1))
    if a == 1:
        raise AlphaOutOfRange(f"alpha={alpha} outside (0, 1)")
    D = _check_d(D, minimum=3)
    return AllocationResult(m_d=1 - a, m_k=a, value=single_receiver_bound(a, D, a))


@dataclass(frozen=True)
class RatePoint:
    """Every bound evaluated at one (alpha, D) pair.

    ``capacity`` is set only where the exact value is known (D=2 or
    alpha >= 1); ``chain_rate`` and ``uncoded_ub`` only for D >= 3 with
    alpha < 1.
    """

    alpha: Fraction
    D: int
    lower: Fraction
    upper: Fraction
    capacity: Optional[Fraction] = None
    chain_rate: Optional[Fraction] = None
    uncoded_ub: Optional[Fraction] = None


def rate_point(alpha, D) -> RatePoint:
    a = _as_alpha(alpha)
    D = _check_d(D)
    lo = lower_bound(a, D)
    hi = upper_bound(a, D)
    capacity = lo if (D == 2 or a >= 1) else None
    chain = chain_scheme_rate(a, D) if (D >= 3 and a < 1) else None
    uncoded = uncoded_placement_bound(a, D) if (D >= 3 and a < 1) else None
    return RatePoint(a, D, lo, hi, capacity, chain, uncoded)


def sweep(alphas, Ds) -> list:
    """One RatePoint per (alpha, D) pair, alphas outer, Ds inner."""
    return [rate_point(a, D) for a in alphas for D in Ds]


CSV_HEADER = ("alpha", "D", "lower", "upper", "capacity", "chain_rate", "uncoded_ub")


def _cell(v) -> str:
    return "" if v is None else repr(float(v))


def write_sweep_csv(points, fh) -> None:
    """Serialize rate points; undefined columns are left empty."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for p in points:
        writer.writerow(
            [
                repr(float(p.alpha)),
                p.D,
                _cell(p.lower),
                _cell(p.upper),
                _cell(p.capacity),
                _cell(p.chain_rate),
                _cell(p.uncoded_ub),
            ]
        )
