import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from g2mf.dataio import (Dataset, LengthMismatch, MissingGroundTruth, ParseError, AnnotationSimConfig,
                         generate_synthetic_scene, load_annotations, load_dataset, preset_config,
                         save_annotations, save_dataset, segmentation_error, simulate_weak_annotations)
from g2mf.geometry import sampson_distance
from g2mf.graph import build_adjacency
from g2mf.optimize import EnergyParams, energy


@pytest.fixture(scope="module")
def scene():
    return generate_synthetic_scene("homography", 3, 30, 20, 0.0, seed=1)


def test_presets():
    assert preset_config("a").n_per_model == 5 and preset_config("A").n_outliers == 5
    assert (preset_config("B").n_per_model, preset_config("B").n_outliers) == (10, 10)
    assert (preset_config("C").n_per_model, preset_config("C").n_outliers) == (10, 5)


def test_preset_a_single_model():
    ds = generate_synthetic_scene("homography", 1, 40, 20, 0.0, seed=0)
    wa = simulate_weak_annotations(ds, preset_config("A", seed=3))
    assert len(wa) == 10
    idx = np.array([a.point_index for a in wa])
    assert len(set(idx.tolist())) == 10
    assert np.sum(ds.ground_truth[idx] == 1) == 5 and np.sum(ds.ground_truth[idx] == 0) == 5
    # every simulated label is a valid model id, outliers included
    assert all(a.weak_label == 1 for a in wa)


def test_annotations_labels_and_counts(scene):
    wa = simulate_weak_annotations(scene, preset_config("B", seed=0))
    inl = [a for a in wa if scene.ground_truth[a.point_index] > 0]
    assert len(inl) == 30 and len(wa) == 40
    assert all(a.weak_label == scene.ground_truth[a.point_index] for a in inl)
    assert all(1 <= a.weak_label <= 3 for a in wa)


def test_annotations_edge_cases(scene):
    assert simulate_weak_annotations(scene, AnnotationSimConfig(0, 0)) == []
    small = simulate_weak_annotations(scene, AnnotationSimConfig(100, 0))
    assert len(small) == 90
    a = simulate_weak_annotations(scene, preset_config("B", seed=5))
    b = simulate_weak_annotations(scene, preset_config("B", seed=5))
    c = simulate_weak_annotations(scene, preset_config("B", seed=6))
    assert a == b and a != c
    with pytest.raises(MissingGroundTruth):
        simulate_weak_annotations(Dataset(scene.x1, scene.x2), preset_config("B"))
    with pytest.raises(ValueError):
        AnnotationSimConfig(-1, 0)


def brute_error(p, g):
    """Best injective matching of predicted model ids to true ids, by enumeration."""
    P = sorted(set(p.tolist()) - {0})
    G = sorted(set(g.tolist()) - {0})
    slots = G + [None] * len(P)
    best = 0
    for perm in itertools.permutations(slots, len(P)):
        m = dict(zip(P, perm))
        m[0] = 0
        best = max(best, sum(m[a] == b for a, b in zip(p.tolist(), g.tolist())))
    return 100.0 * (1 - best / len(p))


def test_segmentation_error_cases():
    g = np.array([0, 1, 1, 2, 2, 2])
    assert segmentation_error(g, g) == 0.0
    swapped = np.array([0, 2, 2, 1, 1, 1])
    assert segmentation_error(swapped, g) == 0.0
    assert segmentation_error(np.zeros(6, dtype=int), g) == pytest.approx(500 / 6)
    # outlier is never matched to a model
    assert segmentation_error(np.array([1, 0, 0, 2, 2, 2]), g) == pytest.approx(50.0)
    with pytest.raises(LengthMismatch):
        segmentation_error(g, g[:-1])


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 4), st.integers(0, 4), st.lists(st.integers(0, 10_000), min_size=1, max_size=12))
def test_segmentation_error_matches_brute_force(kp, kg, seeds):
    rng = np.random.default_rng(seeds[0])
    n = len(seeds)
    p = rng.integers(0, kp + 1, n)
    g = rng.integers(0, kg + 1, n)
    e = segmentation_error(p, g)
    assert 0.0 <= e <= 100.0
    assert e == pytest.approx(brute_error(p, g), abs=1e-9)


@pytest.mark.parametrize("task,K", [("homography", 1), ("homography", 3), ("fundamental", 2)])
def test_synthetic_scene_exact(task, K):
    ds = generate_synthetic_scene(task, K, 25, 0, 0.0, seed=2)
    assert len(ds) == 25 * K and ds.n_models == K
    assert len(ds.true_models) == K
    for k, model in enumerate(ds.true_models, start=1):
        sel = ds.ground_truth == k
        r = sampson_distance(model, ds.x1[sel], ds.x2[sel])
        assert np.max(r) < 1e-12
    w, h = ds.image_size
    assert np.all((ds.x1 >= 0) & (ds.x1 <= [w, h]))


def test_synthetic_seeds():
    a = generate_synthetic_scene("homography", 2, 20, 10, 1.0, seed=4)
    b = generate_synthetic_scene("homography", 2, 20, 10, 1.0, seed=4)
    c = generate_synthetic_scene("homography", 2, 20, 10, 1.0, seed=5)
    assert np.array_equal(a.x1, b.x1) and np.array_equal(a.ground_truth, b.ground_truth)
    assert not np.array_equal(a.x1, c.x1)
    assert np.sum(a.ground_truth == 0) == 10


def test_ground_truth_beats_any_single_model(scene):
    params = EnergyParams()
    adj = build_adjacency(scene.x1, scene.x2)
    e_gt = energy(scene.x1, scene.x2, scene.true_models, scene.ground_truth, adj, params).total
    for m in scene.true_models:
        lab = np.zeros(len(scene), dtype=int)
        lab[sampson_distance(m, scene.x1, scene.x2) < params.residual_scale**2] = 1
        assert energy(scene.x1, scene.x2, [m], lab, adj, params).total > e_gt


@pytest.mark.parametrize("suffix", ["csv", "json"])
def test_round_trip(tmp_path, scene, suffix):
    path = tmp_path / f"scene.{suffix}"
    save_dataset(scene, path)
    back = load_dataset(path)
    assert np.array_equal(back.x1, scene.x1) and np.array_equal(back.x2, scene.x2)
    assert np.array_equal(back.ground_truth, scene.ground_truth)


def test_annotation_round_trip(tmp_path, scene):
    wa = simulate_weak_annotations(scene, preset_config("C"))
    save_annotations(wa, tmp_path / "wa.json")
    assert load_annotations(tmp_path / "wa.json") == wa


def test_csv_single_row_without_labels(tmp_path):
    p = tmp_path / "one.csv"
    p.write_text("x1,y1,x2,y2\n1,2,3,4\n")
    ds = load_dataset(p)
    assert len(ds) == 1 and ds.ground_truth is None
    assert ds.x2.tolist() == [[3.0, 4.0]]


def test_csv_parse_error_names_row(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x1,y1,x2,y2,label\n1,2,3,4,1\n1,oops,3,4,1\n")
    with pytest.raises(ParseError, match=r"bad.csv:3: field 'y1'"):
        load_dataset(p)
    p.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ParseError, match="header"):
        load_dataset(p)
    p.write_text("x1,y1,x2,y2\n1,2,3\n")
    with pytest.raises(ParseError, match=":2:"):
        load_dataset(p)


def test_json_parse_error(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ParseError):
        load_dataset(p)
    with pytest.raises(ParseError):
        load_dataset(tmp_path / "x.txt")


def test_dataset_validation():
    with pytest.raises(LengthMismatch):
        Dataset(np.zeros((3, 2)), np.zeros((3, 2)), np.array([0, 1]))
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 2)), np.zeros((3, 2)), np.array([0, 2, 2]))
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 2)), np.zeros((2, 2)))
