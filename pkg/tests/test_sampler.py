import numpy as np
import pytest

from foldscope.network import ActivationKind, ActivationPattern, Layer, Mlp
from foldscope.sampler import (
    DEFAULT_DELTA_INIT,
    DEFAULT_DELTA_MIN,
    PathSample,
    SamplerStats,
    dedup_consecutive,
    path_from_strings,
    sample_adaptive,
    sample_equidistant,
)


def net_1d(weights, biases):
    """1-in/1-out ReLU net whose hidden unit i crosses at x = -b_i / w_i."""
    w = np.asarray(weights, dtype=float).reshape(-1, 1)
    b = np.asarray(biases, dtype=float)
    return Mlp(
        layers=(
            Layer(weights=w, bias=b, activation=ActivationKind.RELU),
            Layer(
                weights=np.ones((1, len(b))),
                bias=np.zeros(1),
                activation=ActivationKind.IDENTITY,
                is_output=True,
            ),
        ),
        input_dim=1,
    )


def test_path_from_strings_defaults():
    p = path_from_strings(["00", "01", "11"])
    assert [q.to_string() for q in p.patterns] == ["00", "01", "11"]
    assert p.entry_ts == [0.0, 0.5, 1.0]
    assert len(p) == 3
    with pytest.raises(ValueError):
        path_from_strings([])


def test_dedup_consecutive():
    pats = [ActivationPattern.from_string(s) for s in ["0", "0", "1", "1", "0"]]
    assert [p.to_string() for p in dedup_consecutive(pats)] == ["0", "1", "0"]
    with pytest.raises(ValueError):
        dedup_consecutive([])


def test_sample_adaptive_validates_arguments():
    net = net_1d([1.0], [0.0])
    a, b = np.array([0.0]), np.array([1.0])
    with pytest.raises(ValueError):
        sample_adaptive(net, a, a)  # coinciding endpoints
    with pytest.raises(ValueError):
        sample_adaptive(net, a, b, delta_init=0.0)
    with pytest.raises(ValueError):
        sample_adaptive(net, a, b, delta_init=2.0)
    with pytest.raises(ValueError):
        sample_adaptive(net, a, b, delta_min=0.0)
    with pytest.raises(ValueError):
        sample_adaptive(net, a, b, delta_min=0.5, delta_init=0.1)
    with pytest.raises(ValueError):
        sample_adaptive(net, np.array([0.0, 0.0]), b)  # wrong dimension


def test_constant_region_walk():
    # unit always on along the segment: single pattern, one eval per step
    net = net_1d([1.0], [10.0])
    path = sample_adaptive(net, np.array([0.0]), np.array([1.0]))
    assert [p.to_string() for p in path.patterns] == ["1"]
    assert path.entry_ts == [0.0]
    # start eval + 100 steps of delta_init = 0.01
    assert path.stats.total_steps == 101
    assert path.stats.halvings == 0
    assert path.stats.jumps_accepted_at_dmin == 0


def test_single_crossing_accepted_without_halving():
    # one bit flips per 0.01 step at most, so the walk never needs to halve
    net = net_1d([1.0], [-0.345])
    path = sample_adaptive(net, np.array([0.0]), np.array([1.0]))
    assert [p.to_string() for p in path.patterns] == ["0", "1"]
    assert path.stats.halvings == 0
    assert path.stats.jumps_accepted_at_dmin == 0
    t_entry = path.entry_ts[1]
    assert 0.345 < t_entry <= 0.345 + 0.01


def test_entry_ts_strictly_increasing():
    rng = np.random.default_rng(3)
    for _ in range(20):
        net = net_1d(rng.uniform(-2, 2, 6), rng.uniform(-1, 1, 6))
        path = sample_adaptive(net, np.array([-1.5]), np.array([1.5]))
        assert path.entry_ts[0] == 0.0
        assert all(a < b for a, b in zip(path.entry_ts, path.entry_ts[1:]))
        # consecutive patterns always differ
        assert all(
            p.bits != q.bits for p, q in zip(path.patterns, path.patterns[1:])
        )


def test_jump_accepted_when_crossings_collide():
    # two units crossing 2e-13 apart, away from any step landing point:
    # narrower than delta_min, so the walk accepts a two-bit jump
    net = net_1d([1.0, 1.0], [-0.3456, -0.3456 - 2e-13])
    path = sample_adaptive(net, np.array([0.0]), np.array([1.0]))
    strings = [p.to_string() for p in path.patterns]
    assert strings[0] == "00" and strings[-1] == "11"
    assert path.stats.jumps_accepted_at_dmin == 1
    assert len(path) == 2


def test_close_but_separable_crossings_are_split():
    gap = 1e-6  # far above delta_min: both regions must be visited
    net = net_1d([1.0, 1.0], [-0.3456, -0.3456 - gap])
    path = sample_adaptive(net, np.array([0.0]), np.array([1.0]))
    assert [p.to_string() for p in path.patterns] == ["00", "10", "11"]
    assert path.stats.halvings > 0  # both bits flip inside one 0.01 step
    assert path.stats.jumps_accepted_at_dmin == 0


def test_sample_equidistant_collapses_runs():
    net = net_1d([1.0], [-0.5])
    path = sample_equidistant(net, np.array([0.0]), np.array([1.0]), 11)
    assert [p.to_string() for p in path.patterns] == ["0", "1"]
    assert path.entry_ts == [0.0, 0.6]  # first grid point past the crossing
    assert path.stats.total_steps == 11
    with pytest.raises(ValueError):
        sample_equidistant(net, np.array([0.0]), np.array([1.0]), 1)


def test_equidistant_skips_thin_region_adaptive_does_not():
    # region of width 2e-4 between two crossings: invisible on a 11-point grid
    net = net_1d([1.0, -1.0], [-0.5432, 0.5434])
    a, b = np.array([0.0]), np.array([1.0])
    coarse = sample_equidistant(net, a, b, 11)
    adaptive = sample_adaptive(net, a, b)
    assert len(coarse) < len(adaptive)
    assert len(adaptive) == 3


def test_to_json_dict_shape():
    path = PathSample(
        patterns=[ActivationPattern.from_string("01")],
        entry_ts=[0.0],
        stats=SamplerStats(total_steps=5, halvings=2, jumps_accepted_at_dmin=1),
    )
    doc = path.to_json_dict()
    assert doc == {
        "entry_ts": [0.0],
        "patterns": ["01"],
        "stats": {"total_steps": 5, "halvings": 2, "jumps_accepted_at_dmin": 1},
    }


def test_default_deltas():
    assert DEFAULT_DELTA_INIT == 1e-2
    assert DEFAULT_DELTA_MIN == 1e-9
