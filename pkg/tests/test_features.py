import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from seasongan.features import (
    FeatureVector,
    SequenceFeature,
    cosine_distance,
    export_features_text,
    extract_feature,
    extract_features,
    normalize,
    read_features,
    stack_sequence,
    stack_windows,
    write_features,
)
from seasongan.nets import DiscriminatorConfig, GeneratorConfig, discriminator_forward, init_networks

finite = st.floats(-1e3, 1e3, allow_nan=False).filter(lambda v: abs(v) > 1e-3)
vectors = st.integers(2, 12).flatmap(lambda d: arrays(np.float64, d, elements=finite))


def pair(dim_strategy=st.integers(2, 12)):
    return dim_strategy.flatmap(lambda d: st.tuples(arrays(np.float64, d, elements=finite),
                                                    arrays(np.float64, d, elements=finite)))


@pytest.fixture(scope="module")
def disc():
    gcfg = GeneratorConfig(input_size=16, encoder_channels=[4, 8])
    dcfg = DiscriminatorConfig(input_size=16, encoder_channels=[4, 8], feature_dim=10)
    d = init_networks(gcfg, dcfg, 3)[2]
    d.forward(np.random.default_rng(0).uniform(-1, 1, (4, 3, 16, 16)), train=True)
    return d


def test_extraction_matches_discriminator(disc):
    x = np.random.default_rng(1).uniform(-1, 1, (5, 3, 16, 16))
    feats = extract_features(disc, x)
    assert feats.shape == (5, 10)
    np.testing.assert_array_equal(feats, discriminator_forward(disc, x)[0])
    # chunking changes only the matmul summation order
    np.testing.assert_allclose(extract_features(disc, x, batch_size=2), feats, rtol=0, atol=1e-15)
    single = extract_feature(disc, x[3], source_frame=7, domain="A")
    np.testing.assert_allclose(single.values, feats[3], rtol=0, atol=1e-15)
    assert single.source_frame == 7
    twice = extract_features(disc, np.stack([x[0], x[0]]))
    np.testing.assert_array_equal(twice[0], twice[1])


def test_normalize_basics():
    np.testing.assert_allclose(normalize(np.array([3.0, 4.0])), [0.6, 0.8], atol=1e-15)
    u = np.array([0.0, 1.0, 0.0])
    np.testing.assert_allclose(normalize(u), u, atol=1e-12)
    f = normalize(FeatureVector(np.array([2.0, 0.0]), 4, "B"))
    assert isinstance(f, FeatureVector) and f.source_frame == 4
    with pytest.raises(ValueError):
        normalize(np.zeros(3))


@settings(max_examples=200, deadline=None)
@given(vectors, st.floats(1e-3, 1e3))
def test_normalize_scale_invariant(v, c):
    a, b = normalize(c * v), normalize(v)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)
    assert abs(np.linalg.norm(b) - 1.0) < 1e-12
    np.testing.assert_allclose(normalize(b), b, rtol=0, atol=1e-12)


def test_cosine_distance_basics():
    f = np.array([1.0, 2.0, -1.0])
    assert cosine_distance(f, f) == 0.0
    assert cosine_distance(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 1.0
    assert cosine_distance(np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == 2.0
    with pytest.raises(ValueError):
        cosine_distance(np.zeros(2), np.ones(2))


@settings(max_examples=200, deadline=None)
@given(pair(), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_cosine_distance_properties(fg, c1, c2):
    f, g = fg
    d = cosine_distance(f, g)
    assert 0.0 <= d <= 2.0
    assert abs(d - cosine_distance(g, f)) < 1e-12
    assert abs(d - cosine_distance(c1 * f, c2 * g)) < 1e-12
    assert abs(d - np.clip(oracles.cosine_distance_scalar(f, g), 0, 2)) < 1e-12


def test_stack_sequence_cases():
    feats = [FeatureVector(np.eye(3)[i], i) for i in range(3)]
    one = stack_sequence(feats, 1, 2)
    np.testing.assert_array_equal(one.values, feats[2].values)
    three = stack_sequence(feats, 3, 2)
    np.testing.assert_array_equal(three.values, np.eye(3).ravel())
    assert (three.start_frame, three.end_frame, three.length) == (0, 2, 3)
    with pytest.raises(ValueError):
        stack_sequence(feats, 3, 3)
    with pytest.raises(ValueError):
        stack_sequence(feats, 0, 1)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_stacked_distance_decomposition(n, dim, seed):
    rng = np.random.default_rng(seed)
    q = rng.normal(size=(n, dim))
    db = rng.normal(size=(n, dim))
    sq, sdb = stack_windows(q, n)[0], stack_windows(db, n)[0]
    cos = [np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)) for a, b in zip(q, db)]
    assert abs(cosine_distance(sq, sdb) - (1.0 - np.mean(cos))) < 1e-12


def test_stack_windows_layout():
    f = np.arange(1.0, 13.0).reshape(6, 2)
    w = stack_windows(f, 3, "post")
    assert w.shape == (4, 6)
    expected = f[1:4].ravel()
    np.testing.assert_allclose(w[1], expected / np.linalg.norm(expected), atol=1e-15)
    np.testing.assert_allclose(np.linalg.norm(stack_windows(f, 3), axis=1), 1.0, atol=1e-12)
    with pytest.raises(ValueError):
        stack_windows(f, 7)
    with pytest.raises(ValueError):
        stack_windows(f, 2, "sideways")


def test_pre_and_post_stack_differ_only_with_unequal_norms():
    unit = normalize(np.array([1.0, 2.0]))
    f = np.stack([unit, 3.0 * unit[::-1]])
    assert not np.allclose(stack_windows(f, 2, "pre"), stack_windows(f, 2, "post"))
    g = np.stack([unit, unit[::-1]])
    np.testing.assert_allclose(stack_windows(g, 2, "pre"), stack_windows(g, 2, "post"), atol=1e-15)


def test_feature_file_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    feats = [FeatureVector(rng.normal(size=4), i, "A") for i in range(3)]
    write_features(tmp_path / "f.bin", feats, normalized=False)
    back, normalized = read_features(tmp_path / "f.bin")
    assert normalized is False
    for a, b in zip(feats, back):
        np.testing.assert_array_equal(a.values, b.values)
        assert (a.source_frame, a.domain) == (b.source_frame, b.domain)
    raw = (tmp_path / "f.bin").read_bytes()
    (tmp_path / "t.bin").write_bytes(raw[:-5])
    with pytest.raises(ValueError):
        read_features(tmp_path / "t.bin")
    (tmp_path / "x.bin").write_bytes(b"junk")
    with pytest.raises(ValueError):
        read_features(tmp_path / "x.bin")
    export_features_text(tmp_path / "f.csv", feats)
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "frame_index,domain,feature_dim,values" and len(lines) == 4
    assert SequenceFeature(np.ones(2), 3, 2).end_frame == 4
