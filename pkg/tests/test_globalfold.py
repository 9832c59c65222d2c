import io
from fractions import Fraction

import numpy as np
import pytest

from foldscope.globalfold import (
    LabeledDataset,
    chi_plus,
    draw_distinct_indices,
    global_phi,
    load_dataset_csv,
    mann_whitney_u,
    pairwise_chi,
    save_dataset_csv,
    write_pair_csv,
)
from foldscope.network import ActivationKind
from foldscope.training import init_network, make_dataset


def folded_net(seed=3):
    # two hidden layers fold enough for non-zero chi values to show up
    return init_network([2, 8, 8, 2], ActivationKind.RELU, seed=seed)


def test_dataset_validation():
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((3, 2)), np.zeros(2, dtype=int))
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros(3), np.zeros(3, dtype=int))
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((2, 2)), np.array([0, -1]))
    data = LabeledDataset(np.array([[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]]), np.array([1, 0, 1]))
    assert data.classes == [0, 1]
    assert data.n_classes == 2
    assert np.array_equal(data.by_class(1), [[0.0, 1.0], [4.0, 5.0]])


def test_dataset_csv_roundtrip_stable_bytes():
    data = make_dataset("two_gaussians", 20, 0.1, 42)
    buf1 = io.StringIO()
    save_dataset_csv(data, buf1)
    again = load_dataset_csv(io.StringIO(buf1.getvalue()))
    assert np.array_equal(again.inputs, data.inputs)
    assert np.array_equal(again.labels, data.labels)
    buf2 = io.StringIO()
    save_dataset_csv(again, buf2)
    assert buf1.getvalue() == buf2.getvalue()
    assert buf1.getvalue().startswith("x_0,x_1,label\n")


def test_dataset_csv_rejects_malformed():
    for text in [
        "",
        "x_0,x_1\n0.0,1.0\n",  # no label column
        "x_0,x_1,label\n",  # header only
        "x_0,x_1,label\n0.0,1.0\n",  # short row
        "x_0,x_1,label\n0.0,one,1\n",  # non-numeric feature
        "x_0,x_1,label\n0.0,1.0,1.5\n",  # non-integer label
    ]:
        with pytest.raises(ValueError):
            load_dataset_csv(io.StringIO(text))


def test_draw_distinct_indices_is_prefix_stable():
    for seed in range(20):
        short = draw_distinct_indices(100, 5, np.random.default_rng(seed))
        longer = draw_distinct_indices(100, 9, np.random.default_rng(seed))
        assert longer[:5] == short  # bigger budgets extend, never rewrite
        assert len(set(longer)) == 9  # no replacement
    everything = draw_distinct_indices(7, 7, np.random.default_rng(0))
    assert sorted(everything) == list(range(7))
    capped = draw_distinct_indices(4, 50, np.random.default_rng(1))
    assert sorted(capped) == list(range(4))


def test_pairwise_chi_deterministic_and_capped():
    net = folded_net()
    rng = np.random.default_rng(8)
    a = rng.uniform(-1, 1, (3, 2))
    b = rng.uniform(-1, 1, (4, 2))
    v1 = pairwise_chi(net, a, b, budget=50, seed=5)
    v2 = pairwise_chi(net, a, b, budget=50, seed=5)
    assert v1 == v2
    assert len(v1) == 12  # budget capped at |A| * |B|
    assert all(isinstance(v, Fraction) and 0 <= v <= 1 for v in v1)
    with pytest.raises(ValueError):
        pairwise_chi(net, a, b, budget=0, seed=5)
    with pytest.raises(ValueError):
        pairwise_chi(net, np.zeros((0, 2)), b, budget=5, seed=5)


def test_pairwise_chi_identical_points_count_zero():
    net = folded_net()
    same = np.array([[0.25, -0.5]])
    assert pairwise_chi(net, same, same, budget=5, seed=0) == [Fraction(0)]


def test_chi_plus_median_rules():
    f = Fraction
    assert chi_plus([f(0), f(0), f(0)]) == 0
    assert chi_plus([f(1, 4)]) == f(1, 4)
    # even count of positives: lower of the two middle values
    assert chi_plus([f(1, 4), f(1, 2)]) == f(1, 4)
    assert chi_plus([f(0), f(1, 3), f(2, 3), f(1, 2)]) == f(1, 2)
    assert chi_plus([f(0), f(1, 5), f(0)]) == f(1, 5)  # zeros never dilute the median
    with pytest.raises(ValueError):
        chi_plus([])


def test_mann_whitney_hand_checked():
    res = mann_whitney_u([1.0, 2.0, 2.0, 3.0, 5.0], [2.0, 2.0, 4.0, 4.0, 6.0, 7.0])
    # brute force over the 30 pairs: 6 wins + 4 ties at half credit
    assert res.u_statistic == 8.0
    # tie-corrected normal approximation, no continuity correction
    assert res.z_score == pytest.approx(-1.3112201362143716, abs=1e-12)
    assert res.effect_size_r == pytest.approx(res.z_score / np.sqrt(11))


def test_mann_whitney_brute_force_small():
    rng = np.random.default_rng(21)
    for _ in range(100):
        xs = [float(v) for v in rng.integers(0, 4, int(rng.integers(1, 8)))]
        ys = [float(v) for v in rng.integers(0, 4, int(rng.integers(1, 8)))]
        brute = sum(1.0 if x > y else 0.5 if x == y else 0.0 for x in xs for y in ys)
        assert mann_whitney_u(xs, ys).u_statistic == brute


def test_mann_whitney_degenerate_variance():
    res = mann_whitney_u([1.0, 1.0], [1.0, 1.0, 1.0])
    assert res.u_statistic == 3.0  # all ties, half credit
    assert res.z_score == 0.0 and res.effect_size_r == 0.0
    with pytest.raises(ValueError):
        mann_whitney_u([], [1.0])


def test_global_phi_report_structure():
    net = folded_net()
    data = make_dataset("xor_quadrants", 24, 0.15, 11)
    report = global_phi(net, data, budget_per_pair=12, seed=2)
    assert len(report.per_pair) == 2  # ordered pairs (0,1) and (1,0)
    assert len(report.intra_stats) == 2
    assert 0 <= report.phi <= 1
    expected = sum((s.chi_plus for s in report.per_pair), Fraction(0)) / 2
    assert report.phi == expected
    for stats in report.per_pair + report.intra_stats:
        assert stats.n_pairs_evaluated == 12
        assert stats.n_zero == sum(1 for v in stats.chi_values if v == 0)
    assert report.mw_test is not None
    doc = report.to_json_dict()
    assert set(doc) == {"phi", "phi_decimal", "per_pair", "intra_stats", "mw_test"}
    assert doc["phi"] == {
        "num": report.phi.numerator,
        "den": report.phi.denominator,
    }


def test_global_phi_parallel_matches_serial():
    net = folded_net(seed=6)
    data = make_dataset("two_gaussians", 30, 0.2, 5)
    serial = global_phi(net, data, budget_per_pair=15, seed=9, max_workers=1)
    threaded = global_phi(net, data, budget_per_pair=15, seed=9, max_workers=4)
    assert serial.phi == threaded.phi
    for a, b in zip(serial.per_pair, threaded.per_pair):
        assert a.chi_values == b.chi_values


def test_global_phi_needs_two_classes():
    net = folded_net()
    data = LabeledDataset(np.random.default_rng(0).uniform(-1, 1, (6, 2)), np.zeros(6, dtype=int))
    with pytest.raises(ValueError):
        global_phi(net, data, budget_per_pair=4, seed=0)


def test_pair_csv_layout():
    net = folded_net()
    data = make_dataset("two_gaussians", 16, 0.1, 1)
    report = global_phi(net, data, budget_per_pair=6, seed=3)
    buf = io.StringIO()
    write_pair_csv(report, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "class_from,class_to,chi_plus,n_pairs,n_zero"
    assert len(lines) == 1 + 4  # 2 inter + 2 intra rows
    assert lines[1].startswith("0,1,")
