import numpy as np
import pytest

from mdlvq.design import gaussian_source
from mdlvq.labeling import alpha, assign, quantizer_setup, side_distortion
from mdlvq.loss_model import channel, subset_prob
from mdlvq.simulate import (SimConfig, decode, encode, erase, generate, run,
                            stream_rng)


@pytest.fixture(scope="module")
def sim_setup():
    src = gaussian_source(2, 1.0)
    ch = channel([0.1, 0.2])
    setup = quantizer_setup("Z2", (5, 5), nu=0.05)
    asg = assign(setup, ch, psi=1.0)
    return src, ch, asg


def test_generate_deterministic():
    src = gaussian_source(2, 1.0)
    a = generate(src, 1000, seed=9)
    b = generate(src, 1000, seed=9)
    assert np.array_equal(a, b)
    c = generate(src, 1000, seed=10)
    assert not np.array_equal(a, c)


def test_generate_moments():
    src = gaussian_source(2, 1.0)
    x = generate(src, 200_000, seed=3)
    n = x.size
    assert abs(x.mean()) < 4.0 / np.sqrt(n)
    assert abs((x * x).mean() - 1.0) < 4.0 * np.sqrt(2.0 / n)


def test_generate_rejects_custom_source():
    from mdlvq.design import custom_source
    with pytest.raises(ValueError):
        generate(custom_source(2, 2.0, 1.0), 10, seed=1)


def test_encode_on_lattice_point(sim_setup):
    _, _, asg = sim_setup
    scale = asg.setup.scale()
    pt = asg.setup.central.point((3, -2))
    central, labels = encode(asg, pt.embedding * scale)
    assert central.coords == (3, -2)
    assert labels == alpha(asg, pt)


def test_encode_decode_roundtrip(sim_setup):
    _, _, asg = sim_setup
    rng = np.random.default_rng(19)
    scale = asg.setup.scale()
    for _ in range(100):
        x = rng.normal(size=2)
        central, labels = encode(asg, x)
        full = decode(asg, range(2), labels)
        assert np.allclose(full, central.embedding * scale, atol=1e-12)


def test_encode_shift_consistency(sim_setup):
    _, _, asg = sim_setup
    scale = asg.setup.scale()
    shift_own = np.array([2, -1])
    shift_parent = shift_own @ asg.setup.product.gen
    shift_phys = shift_parent.astype(float) @ asg.setup.central.basis * scale
    x = np.array([0.123, -0.456])
    _, labels = encode(asg, x)
    _, labels2 = encode(asg, x + shift_phys)
    for i in range(2):
        own_shift = asg.setup.subs[i].from_parent(shift_parent)
        assert tuple(np.asarray(labels[i].coords) + own_shift) == labels2[i].coords


def test_erase_extremes(sim_setup):
    rng = stream_rng(1, 1)
    descs = (0, 1)
    assert erase(descs, channel([0.0, 0.0]), rng) == frozenset({0, 1})
    assert erase(descs, channel([1.0, 1.0]), rng) == frozenset()


def test_erase_frequencies():
    rng = stream_rng(5, 1)
    ch = channel([0.3, 0.6])
    n = 50_000
    hits = np.zeros(2)
    for _ in range(n):
        got = erase((0, 1), ch, rng)
        for i in got:
            hits[i] += 1
    for i, p in enumerate(ch.loss):
        q = 1.0 - p
        assert abs(hits[i] / n - q) < 4.0 * np.sqrt(q * p / n)


def test_decode_examples():
    # three descriptions so that receiving two decodes to their average
    setup = quantizer_setup("Z2", (1, 1, 1), nu=1.0)
    a = assign(setup, channel([0.1, 0.2, 0.1]), psi=1.0)
    tuples = (setup.subs[0].point((0, 5)),
              setup.subs[1].point((3, -1)),
              setup.subs[2].point((7, 7)))
    assert np.allclose(decode(a, [0, 1], tuples), np.array([1.5, 2.0]))
    assert np.allclose(decode(a, [0], tuples), np.array([0.0, 5.0]))
    # none received: the source mean
    assert np.allclose(decode(a, [], tuples), np.zeros(2))
    # identity labeling: full reception inverts to the shared point
    pt = setup.central.point((4, -4))
    labels = alpha(a, pt)
    assert np.allclose(decode(a, [0, 1, 2], labels), pt.embedding)


def test_run_deterministic(sim_setup):
    src, ch, asg = sim_setup
    cfg = SimConfig(30_000, 77, src, ch, asg)
    a = run(cfg)
    b = run(cfg)
    assert a == b


def test_run_decomposition_identity(sim_setup):
    src, ch, asg = sim_setup
    rep = run(SimConfig(50_000, 13, src, ch, asg))
    acc = 0.0
    total_count = 0
    for stat in rep.per_subset.values():
        acc += stat.count * stat.distortion
        total_count += stat.count
    assert total_count == rep.count
    assert acc / rep.count == pytest.approx(rep.total, abs=1e-12)


def test_run_conditional_limits(sim_setup):
    src, _, asg = sim_setup
    ch = channel([0.5, 0.5])  # plenty of mass on every subset
    rep = run(SimConfig(200_000, 21, src, ch, asg))
    d_c = asg.setup.central.second_moment * asg.setup.nu
    full = rep.per_subset[(0, 1)]
    assert abs(full.distortion - d_c) < 3 * full.std_err + 0.02 * d_c
    none = rep.per_subset[()]
    assert abs(none.distortion - src.mean_power) < 3 * none.std_err
    for sub in [(0,), (1,)]:
        st = rep.per_subset[sub]
        pred = d_c + side_distortion(asg, sub)
        assert abs(st.distortion - pred) < 3 * st.std_err + 0.02 * pred


def test_run_subset_frequencies(sim_setup):
    src, ch, asg = sim_setup
    rep = run(SimConfig(100_000, 31, src, ch, asg))
    for sub, stat in rep.per_subset.items():
        p = subset_prob(ch, sub)
        se = np.sqrt(p * (1 - p) / rep.count)
        assert abs(stat.count / rep.count - p) < 4 * se + 1e-6


def test_sim_config_validation(sim_setup):
    src, ch, asg = sim_setup
    with pytest.raises(ValueError):
        SimConfig(0, 1, src, ch, asg)
    with pytest.raises(ValueError):
        SimConfig(10, 1, gaussian_source(1, 1.0), ch, asg)
    with pytest.raises(ValueError):
        SimConfig(10, 1, src, channel([0.1, 0.2, 0.3]), asg)
