from fractions import Fraction

import math

import numpy as np
import pytest

from foldscope.folding import (
    DisconnectedPathsError,
    SingularPathError,
    chi,
    concat,
    fold_report,
    interaction,
    r1,
    r2,
    reverse,
    smooth_chi,
    smooth_r1,
)
from foldscope.sampler import SamplerStats, path_from_strings


def random_path(rng, n_patterns=None, n_bits=None):
    n = n_patterns or int(rng.integers(2, 12))
    bits = n_bits or int(rng.integers(1, 10))
    rows = rng.integers(0, 2, (n, bits))
    # keep consecutive rows distinct so entry times stay meaningful
    for i in range(1, n):
        if np.array_equal(rows[i], rows[i - 1]):
            rows[i, rng.integers(bits)] ^= 1
    return path_from_strings(["".join(map(str, row)) for row in rows])


def test_folded_square_path():
    # visiting three corners of a square and stepping back: r1 < r2
    p = path_from_strings(["000", "001", "111", "101"])
    assert r1(p) == 3
    assert r2(p) == 4
    assert chi(p) == Fraction(1, 4)


def test_two_segment_split_values():
    whole = path_from_strings(["000", "001", "111", "101"])
    head = path_from_strings(["000", "001"])
    tail = path_from_strings(["001", "111", "101"])
    assert chi(head) == 0
    assert chi(tail) == Fraction(1, 3)
    assert chi(concat(head, tail)) == chi(whole) == Fraction(1, 4)
    assert interaction(head, tail) == Fraction(1, 12)


def test_heavily_folded_path():
    p = path_from_strings(["000", "111", "001", "100"])
    assert chi(p) == Fraction(4, 7)
    tail = path_from_strings(["111", "001", "100"])
    assert chi(tail) == Fraction(1, 2)
    head = path_from_strings(["000", "111"])
    assert interaction(head, tail) == Fraction(1, 14)


def test_direction_sensitivity():
    p = path_from_strings(["000", "111", "001"])
    assert r1(p) == 3
    assert r2(p) == 5
    assert chi(p) == Fraction(2, 5)
    back = reverse(p)
    assert r1(back) == 2
    assert r2(back) == 5  # traveled distance is orientation-free
    assert chi(back) == Fraction(3, 5)


def test_reverse_entry_parameters():
    p = path_from_strings(["00", "01", "11"], entry_ts=[0.0, 0.2, 0.7])
    back = reverse(p)
    assert [q.to_string() for q in back.patterns] == ["11", "01", "00"]
    # regions are entered at 1 - (forward exit), walked from the far end
    assert back.entry_ts == [0.0, pytest.approx(0.3), pytest.approx(0.8)]
    assert back.entry_ts[0] == 0.0
    assert reverse(back).entry_ts == [0.0, pytest.approx(0.2), pytest.approx(0.7)]


def test_singleton_path_is_flat():
    p = path_from_strings(["0110"])
    assert r1(p) == 0 and r2(p) == 0
    assert chi(p) == 0
    rep = fold_report(p)
    assert rep.flat and rep.chi == 0 and rep.n_patterns == 1
    with pytest.raises(SingularPathError):
        smooth_chi(p, 10.0)


def test_concat_validates_shared_endpoint():
    p1 = path_from_strings(["00", "01"])
    p2 = path_from_strings(["11", "10"])
    with pytest.raises(DisconnectedPathsError):
        concat(p1, p2)
    joined = concat(p1, path_from_strings(["01", "11"]))
    assert [q.to_string() for q in joined.patterns] == ["00", "01", "11"]
    assert joined.entry_ts == [0.0, 0.5, 1.0]


def test_concat_sums_stats():
    p1 = path_from_strings(["0", "1"])
    p1.stats = SamplerStats(total_steps=10, halvings=2, jumps_accepted_at_dmin=1)
    p2 = path_from_strings(["1", "0"])
    p2.stats = SamplerStats(total_steps=7, halvings=1, jumps_accepted_at_dmin=0)
    joined = concat(p1, p2)
    assert joined.stats.total_steps == 17
    assert joined.stats.halvings == 3
    assert joined.stats.jumps_accepted_at_dmin == 1


def test_looped_path_approaches_one():
    for m in (3, 11, 101):
        pats = ["01" if i % 2 else "00" for i in range(m)]
        p = path_from_strings(pats)
        assert chi(p) == 1 - Fraction(1, m - 1)
    assert float(chi(path_from_strings(["01" if i % 2 else "00" for i in range(101)]))) == 0.99


def test_smooth_r1_known_value():
    # Hamming profile 0, 1, 3, 2 at beta = 10
    p = path_from_strings(["000", "100", "111", "110"])
    assert smooth_r1(p, 10.0) == pytest.approx(3.000004540096037, rel=1e-12)
    with pytest.raises(ValueError):
        smooth_r1(p, 0.0)
    with pytest.raises(ValueError):
        smooth_r1(p, -1.0)


def test_smooth_r1_handles_large_products():
    # max-shifted evaluation: beta * d up to 50000 must not overflow
    p = path_from_strings(["0" * 500, "1" * 500])
    val = smooth_r1(p, 100.0)
    assert math.isfinite(val)
    assert val >= 500.0


def test_smooth_chi_tracks_exact_chi():
    rng = np.random.default_rng(9)
    for _ in range(50):
        p = random_path(rng, n_patterns=6, n_bits=8)
        if r2(p) == 0:
            continue
        exact = float(chi(p))
        approx = smooth_chi(p, 1000.0)
        assert abs(exact - approx) < 0.01


def test_duplicate_insertion_invariance_small():
    base = path_from_strings(["000", "001", "111", "101"])
    dup = path_from_strings(["000", "001", "001", "001", "111", "101", "101"])
    assert chi(dup) == chi(base)
    assert r1(dup) == r1(base)
    assert r2(dup) == r2(base)


def test_fold_report_json_dict():
    p = path_from_strings(["000", "111", "001"])
    doc = fold_report(p).to_json_dict()
    assert doc["r1"] == 3 and doc["r2"] == 5
    assert doc["chi"] == {"num": 2, "den": 5}
    assert doc["chi_reversed"] == {"num": 3, "den": 5}
    assert doc["chi_decimal"] == pytest.approx(0.4)
    assert doc["flat"] is False
    assert doc["stats"]["total_steps"] == 3  # hand-built path: one eval per pattern
