"""Walking a straight input segment through activation regions.

The adaptive walk steps from x1 toward x2 and halves its step whenever the
pattern jumps by more than one bit, so that (step size permitting) every
region along the segment is recorded exactly once, in order. An equidistant
walk is provided as the naive baseline; it can skip thin regions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import ActivationPattern, Mlp, pattern_bits

DEFAULT_DELTA_INIT = 1e-2
DEFAULT_DELTA_MIN = 1e-9


@dataclass
class SamplerStats:
    total_steps: int = 0  # forward evaluations, including the start point and refinements
    halvings: int = 0
    jumps_accepted_at_dmin: int = 0  # transitions stored with more than one bit flipped


@dataclass
class PathSample:
    """Ordered activation patterns along a segment, with region entry parameters.

    entry_ts[i] is the parameter t in [0, 1] at which patterns[i] was first
    recorded; it starts at 0.0 and is strictly increasing. Samplers never
    store the same pattern twice in a row.
    """

    patterns: list[ActivationPattern]
    entry_ts: list[float]
    stats: SamplerStats = field(default_factory=SamplerStats)

    def __len__(self) -> int:
        return len(self.patterns)

    def to_json_dict(self) -> dict:
        return {
            "entry_ts": list(self.entry_ts),
            "patterns": [p.to_string() for p in self.patterns],
            "stats": {
                "total_steps": self.stats.total_steps,
                "halvings": self.stats.halvings,
                "jumps_accepted_at_dmin": self.stats.jumps_accepted_at_dmin,
            },
        }


def path_from_strings(patterns, entry_ts=None) -> PathSample:
    """Build a PathSample by hand from "0101"-style strings (tests, fixtures)."""
    pats = [
        p if isinstance(p, ActivationPattern) else ActivationPattern.from_string(p)
        for p in patterns
    ]
    if not pats:
        raise ValueError("a path needs at least one pattern")
    if entry_ts is None:
        n = len(pats)
        entry_ts = [0.0] if n == 1 else [k / (n - 1) for k in range(n)]
    return PathSample(pats, list(entry_ts), SamplerStats(total_steps=len(pats)))


def dedup_consecutive(raw: list[ActivationPattern]) -> list[ActivationPattern]:
    """Collapse consecutive equal patterns; order preserved."""
    if not raw:
        raise ValueError("cannot deduplicate an empty pattern list")
    out = [raw[0]]
    for p in raw[1:]:
        if p != out[-1]:
            out.append(p)
    return out


def _check_segment(net: Mlp, x1, x2) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x1, dtype=np.float64)
    b = np.asarray(x2, dtype=np.float64)
    if a.shape != (net.input_dim,) or b.shape != (net.input_dim,):
        raise ValueError(
            f"segment endpoints must have shape ({net.input_dim},), "
            f"got {a.shape} and {b.shape}"
        )
    return a, b


def sample_adaptive(
    net: Mlp,
    x1,
    x2,
    delta_init: float = DEFAULT_DELTA_INIT,
    delta_min: float = DEFAULT_DELTA_MIN,
) -> PathSample:
    """Adaptive step-halving walk from x1 to x2.

    A step is accepted when the pattern changed on exactly one neuron, or on
    more when the step size has already been halved down to delta_min (the
    jump is then recorded and counted). The step size resets to delta_init
    after every accepted crossing; steps inside one region just advance t.
    """
    if not (0.0 < delta_init <= 1.0):
        raise ValueError("delta_init must lie in (0, 1]")
    if not (0.0 < delta_min <= delta_init):
        raise ValueError("delta_min must lie in (0, delta_init]")
    a, b = _check_segment(net, x1, x2)
    if np.array_equal(a, b):
        raise ValueError("segment endpoints coincide")
    direction = b - a

    bits_prev = pattern_bits(net, a)
    patterns = [ActivationPattern.from_bits(bits_prev)]
    entry_ts = [0.0]
    stats = SamplerStats(total_steps=1)

    t = 0.0
    dt = float(delta_init)
    while t < 1.0:
        t_next = min(t + dt, 1.0)
        if t_next == t:  # below float resolution at this t; force progress
            t_next = min(float(np.nextafter(t, 2.0)), 1.0)
        bits_next = pattern_bits(net, a + t_next * direction)
        stats.total_steps += 1
        d = int(np.count_nonzero(bits_prev != bits_next))
        if d == 0:
            t = t_next
        elif d == 1 or dt <= delta_min:
            if d > 1:
                stats.jumps_accepted_at_dmin += 1
            patterns.append(ActivationPattern.from_bits(bits_next))
            entry_ts.append(t_next)
            bits_prev = bits_next
            t = t_next
            dt = float(delta_init)
        else:
            dt /= 2.0
            stats.halvings += 1
    return PathSample(patterns, entry_ts, stats)


def sample_equidistant(net: Mlp, x1, x2, n_points: int) -> PathSample:
    """Evaluate the pattern at n_points equally spaced t values, collapsing runs."""
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    a, b = _check_segment(net, x1, x2)
    direction = b - a

    patterns: list[ActivationPattern] = []
    entry_ts: list[float] = []
    prev = None
    for k in range(n_points):
        t = k / (n_points - 1)
        bits = pattern_bits(net, a + t * direction)
        if prev is None or np.any(bits != prev):
            patterns.append(ActivationPattern.from_bits(bits))
            entry_ts.append(t)
            prev = bits
    return PathSample(patterns, entry_ts, SamplerStats(total_steps=n_points))
