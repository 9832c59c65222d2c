"""Per-path folding measures.

For a path of activation patterns, r1 is the largest Hamming distance from
the starting pattern and r2 the total Hamming distance traveled step by
step. Their ratio defines the folding measure chi = 1 - r1/r2: 0 means the
walk never moves back toward its start (flat), values near 1 mean the walk
keeps returning close to where it began. chi is direction-sensitive, so a
report carries the value for both orientations.

r1, r2 and chi are exact (integer / Fraction arithmetic); smooth_r1 is the
log-sum-exp relaxation of the max used as a differentiable stand-in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .network import hamming
from .sampler import PathSample, SamplerStats


class DisconnectedPathsError(ValueError):
    """Joining paths requires the first to end where the second starts."""


class SingularPathError(ValueError):
    """The path never leaves its region (r2 = 0), so the ratio is undefined."""


@dataclass(frozen=True)
class FoldingReport:
    r1: int
    r2: int
    chi: Fraction
    chi_reversed: Fraction
    n_patterns: int
    flat: bool
    stats: Optional[SamplerStats] = None

    def to_json_dict(self) -> dict:
        doc = {
            "r1": self.r1,
            "r2": self.r2,
            "chi": {"num": self.chi.numerator, "den": self.chi.denominator},
            "chi_decimal": float(self.chi),
            "chi_reversed": {
                "num": self.chi_reversed.numerator,
                "den": self.chi_reversed.denominator,
            },
            "chi_reversed_decimal": float(self.chi_reversed),
            "n_patterns": self.n_patterns,
            "flat": self.flat,
        }
        if self.stats is not None:
            doc["stats"] = {
                "total_steps": self.stats.total_steps,
                "halvings": self.stats.halvings,
                "jumps_accepted_at_dmin": self.stats.jumps_accepted_at_dmin,
            }
        return doc


def _require_nonempty(path: PathSample) -> None:
    if not path.patterns:
        raise ValueError("path has no patterns")


def r1(path: PathSample) -> int:
    """Largest Hamming distance from the first pattern to any pattern on the path."""
    _require_nonempty(path)
    first = path.patterns[0]
    return max(hamming(first, p) for p in path.patterns)


def r2(path: PathSample) -> int:
    """Total Hamming distance traveled over consecutive steps."""
    _require_nonempty(path)
    pats = path.patterns
    return sum(hamming(pats[i], pats[i + 1]) for i in range(len(pats) - 1))


def chi(path: PathSample) -> Fraction:
    """Folding measure 1 - r1/r2, exact; 0 for paths that never leave a region."""
    _require_nonempty(path)
    total = r2(path)
    if total == 0:
        return Fraction(0)
    return 1 - Fraction(r1(path), total)


def reverse(path: PathSample) -> PathSample:
    """Same walk traversed the other way.

    A region entered at t and left at t_exit on the forward walk is entered
    at 1 - t_exit on the reversed one, so the reversed entry parameters are
    0.0 followed by 1 - t for the forward entries taken last to second.
    """
    _require_nonempty(path)
    ts = path.entry_ts
    new_ts = [0.0] + [1.0 - t for t in ts[:0:-1]]
    return PathSample(list(reversed(path.patterns)), new_ts, path.stats)


def concat(p1: PathSample, p2: PathSample) -> PathSample:
    """Join two paths sharing an endpoint pattern; the shared pattern appears once.

    The combined parameters place each original walk on one half of [0, 1].
    """
    _require_nonempty(p1)
    _require_nonempty(p2)
    if p1.patterns[-1] != p2.patterns[0]:
        raise DisconnectedPathsError(
            "cannot join: first path ends at "
            f"{p1.patterns[-1].to_string()!r} but second starts at "
            f"{p2.patterns[0].to_string()!r}"
        )
    patterns = list(p1.patterns) + list(p2.patterns[1:])
    entry_ts = [0.5 * t for t in p1.entry_ts] + [0.5 + 0.5 * t for t in p2.entry_ts[1:]]
    stats = SamplerStats(
        total_steps=p1.stats.total_steps + p2.stats.total_steps,
        halvings=p1.stats.halvings + p2.stats.halvings,
        jumps_accepted_at_dmin=p1.stats.jumps_accepted_at_dmin
        + p2.stats.jumps_accepted_at_dmin,
    )
    return PathSample(patterns, entry_ts, stats)


def interaction(p1: PathSample, p2: PathSample) -> Fraction:
    """Deviation from additivity of two joinable paths: |chi(p1 + p2) - chi(p1) - chi(p2)|."""
    return abs(chi(concat(p1, p2)) - chi(p1) - chi(p2))


def smooth_r1(path: PathSample, beta: float) -> float:
    """Log-sum-exp relaxation of r1 at temperature beta.

    Always within [r1, r1 + ln(n)/beta]; computed max-shifted so large
    beta * distance products cannot overflow.
    """
    _require_nonempty(path)
    if beta <= 0:
        raise ValueError("beta must be positive")
    first = path.patterns[0]
    scaled = [beta * hamming(first, p) for p in path.patterns]
    m = max(scaled)
    return (m + math.log(sum(math.exp(s - m) for s in scaled))) / beta


def smooth_chi(path: PathSample, beta: float) -> float:
    """1 - smooth_r1/r2; raises SingularPathError when r2 = 0 (report flat instead)."""
    _require_nonempty(path)
    total = r2(path)
    if total == 0:
        raise SingularPathError("path has zero traveled distance; treat it as flat")
    return 1.0 - smooth_r1(path, beta) / total


def fold_report(path: PathSample) -> FoldingReport:
    """Assemble the per-segment report, including the reversed orientation."""
    c = chi(path)
    return FoldingReport(
        r1=r1(path),
        r2=r2(path),
        chi=c,
        chi_reversed=chi(reverse(path)),
        n_patterns=len(path.patterns),
        flat=(c == 0),
        stats=path.stats,
    )
