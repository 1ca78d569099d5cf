import io
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from ecgfuse import (
    ConfigError,
    DegenerateAffinityError,
    Embedding2D,
    SynthConfig,
    TsneConfig,
    ValidationError,
    conditional_affinities,
    export_coords_csv,
    export_scatter_svg,
    generate,
    kl_divergence,
    pairwise_affinities,
    subsample_balanced,
    tsne_embed,
)

QUICK = TsneConfig(n_iter=120, early_exaggeration_iters=40, seed=4)


def blob_data(n=60, d=5, seed=0):
    rng = np.random.default_rng(seed)
    half = n // 2
    x = np.concatenate([rng.normal(loc=-1.5, size=(half, d)),
                        rng.normal(loc=1.5, size=(n - half, d))])
    return x


def test_config_validation():
    TsneConfig()
    with pytest.raises(ConfigError):
        TsneConfig(perplexity=1.0)
    with pytest.raises(ConfigError):
        TsneConfig(n_iter=0)
    with pytest.raises(ConfigError):
        TsneConfig(learning_rate=0.0)
    with pytest.raises(ConfigError):
        TsneConfig(early_exaggeration_iters=-1)


# ---------------------------------------------------------------- affinities

def test_three_equidistant_points_uniform_conditionals():
    # equilateral triangle: p_{j|i} = 0.5 everywhere, entropy exactly 1 bit
    x = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    p_cond, _ = conditional_affinities(x, perplexity=2.0)
    off = p_cond[~np.eye(3, dtype=bool)]
    assert np.allclose(off, 0.5, atol=1e-12)
    row = p_cond[0][[1, 2]]
    entropy = -(row * np.log2(row)).sum()
    assert abs(entropy - 1.0) < 1e-12


def test_row_entropy_matches_perplexity_target():
    x = blob_data(n=70)
    for perplexity in (5.0, 20.0):
        p_cond, betas = conditional_affinities(x, perplexity)
        assert (betas > 0).all()
        target = math.log2(perplexity)
        for i in range(x.shape[0]):
            row = p_cond[i][p_cond[i] > 0]
            entropy = -(row * np.log2(row)).sum()
            assert abs(entropy - target) <= 1e-5


def test_pairwise_affinities_are_a_distribution():
    x = blob_data(n=50)
    p = pairwise_affinities(x, 12.0)
    assert abs(p.sum() - 1.0) <= 1e-9
    assert np.array_equal(p, p.T)
    assert (p >= 0).all()
    assert np.all(np.diag(p) == 0.0)


def test_affinities_invariant_to_power_of_two_scaling():
    x = blob_data(n=40)
    p1 = pairwise_affinities(x, 10.0)
    p2 = pairwise_affinities(4.0 * x, 10.0)
    assert np.array_equal(p1, p2)  # bitwise: the beta search rescales exactly


def test_affinities_stable_under_arbitrary_scaling():
    x = blob_data(n=40)
    p1 = pairwise_affinities(x, 10.0)
    p3 = pairwise_affinities(3.0 * x, 10.0)
    assert np.allclose(p1, p3, rtol=1e-4, atol=1e-12)


def test_affinities_invariant_to_integer_translation():
    # integer-valued data and shift keep every distance bit-identical
    rng = np.random.default_rng(8)
    x = rng.integers(-6, 7, size=(30, 4)).astype(np.float64)
    x[0] += 0.5  # avoid exact duplicate rows
    p1 = pairwise_affinities(x, 8.0)
    p2 = pairwise_affinities(x + 13.0, 8.0)
    assert np.array_equal(p1, p2)


def test_duplicate_heavy_input_raises_degenerate():
    x = np.zeros((12, 3))
    x[0, 0] = 1.0
    with pytest.raises(DegenerateAffinityError) as err:
        conditional_affinities(x, perplexity=3.0)
    assert "row" in str(err.value)


def test_perplexity_bounds():
    x = blob_data(n=10)
    with pytest.raises(ConfigError):
        conditional_affinities(x, perplexity=9.5)  # > n - 1
    with pytest.raises(ValidationError):
        conditional_affinities(x[:2], perplexity=1.5)
    # boundary value n - 1 is legal (the equidistant example needs it)
    p_cond, _ = conditional_affinities(x, perplexity=9.0)
    for i in range(10):
        row = p_cond[i][p_cond[i] > 0]
        assert abs(-(row * np.log2(row)).sum() - math.log2(9.0)) <= 1e-5


# ---------------------------------------------------------------- embedding

def test_embed_shape_finite_and_deterministic():
    x = blob_data(n=60)
    y1 = tsne_embed(x, QUICK)
    y2 = tsne_embed(x, QUICK)
    assert y1.shape == (60, 2)
    assert np.isfinite(y1).all()
    assert np.array_equal(y1, y2)
    y3 = tsne_embed(x, TsneConfig(n_iter=120, early_exaggeration_iters=40, seed=5))
    assert not np.array_equal(y1, y3)


def test_kl_trace_decreases_and_stays_nonnegative():
    x = blob_data(n=60)
    # learning rate scaled down for the small instance; 200 suits n ~ 500
    cfg = TsneConfig(n_iter=400, early_exaggeration_iters=100, learning_rate=25.0,
                     seed=2)
    _, trace = tsne_embed(x, cfg, return_trace=True)
    iters = [it for it, _ in trace]
    kls = [kl for _, kl in trace]
    assert iters[0] == 0 and iters[-1] == cfg.n_iter
    assert all(k >= 0.0 for k in kls)
    assert kls[-1] < kls[0]


def test_duplicate_rows_land_close():
    x = blob_data(n=50)
    x[31] = x[30]
    coords = tsne_embed(x, QUICK)
    twin_dist = float(np.linalg.norm(coords[30] - coords[31]))
    diffs = coords[:, None, :] - coords[None, :, :]
    dists = np.sqrt((diffs ** 2).sum(-1))
    median = float(np.median(dists[np.triu_indices(50, k=1)]))
    assert twin_dist < median


def test_kl_divergence_nonnegative_for_distinct_distributions():
    x = blob_data(n=30)
    p = pairwise_affinities(x, 8.0)
    q = pairwise_affinities(x + np.random.default_rng(0).normal(scale=0.1, size=x.shape), 8.0)
    assert kl_divergence(p, q) >= 0.0
    assert kl_divergence(p, p) == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------- subsampling

def synth_set(n=200, n_pos=60, seed=9):
    a, _ = generate(SynthConfig(n_records=n, n_pos=n_pos, dim_a=4, dim_b=4, seed=seed))
    return a


def test_subsample_balanced_counts():
    es = synth_set()
    out = subsample_balanced(es, per_class=25, seed=3)
    assert out.n == 50
    assert int(out.labels.sum()) == 25
    # original order preserved: ids appear in ascending original position
    positions = [es.ids.index(i) for i in out.ids]
    assert positions == sorted(positions)


def test_subsample_balanced_full_class():
    es = synth_set(n=40, n_pos=10)
    out = subsample_balanced(es, per_class=10, seed=1)
    assert int(out.labels.sum()) == 10
    pos_ids = {i for i, l in zip(es.ids, es.labels) if l == 1}
    assert {i for i, l in zip(out.ids, out.labels) if l == 1} == pos_ids


def test_subsample_balanced_one_per_class():
    out = subsample_balanced(synth_set(n=30, n_pos=8), per_class=1, seed=2)
    assert out.n == 2
    assert sorted(out.labels.tolist()) == [0, 1]


def test_subsample_balanced_insufficient():
    es = synth_set(n=30, n_pos=4)
    with pytest.raises(ValidationError) as err:
        subsample_balanced(es, per_class=5, seed=0)
    assert "4" in str(err.value) and "5" in str(err.value)


def test_subsample_deterministic():
    es = synth_set()
    a = subsample_balanced(es, per_class=20, seed=5)
    b = subsample_balanced(es, per_class=20, seed=5)
    assert a == b


# ---------------------------------------------------------------- exports

def two_point_embedding():
    return Embedding2D(coords=np.array([[0.0, 0.0], [1.0, 2.0]]),
                       labels=np.array([0, 1], dtype=np.uint8), ids=("a", "b"))


def test_svg_has_one_circle_per_point_plus_legend():
    emb = two_point_embedding()
    sink = io.BytesIO()
    export_scatter_svg(emb, sink)
    doc = sink.getvalue().decode("utf-8")
    root = ET.fromstring(doc)  # well-formed XML
    ns = "{http://www.w3.org/2000/svg}"
    point_circles = root.findall("%scircle" % ns)
    legend_groups = root.findall("%sg" % ns)
    assert len(point_circles) == 2
    assert len(legend_groups) == 2  # one per class
    text = [t.text for g in legend_groups for t in g.findall("%stext" % ns)]
    assert set(text) == {"ACS", "non-ACS"}


def test_svg_bytes_deterministic(tmp_path):
    emb = two_point_embedding()
    p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
    export_scatter_svg(emb, p1)
    export_scatter_svg(emb, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_coords_csv_roundtrip(tmp_path):
    emb = Embedding2D(coords=np.array([[0.125, -3.5], [1e-7, 2.0]]),
                      labels=np.array([1, 0], dtype=np.uint8), ids=("r1", "r2"))
    path = tmp_path / "coords.csv"
    export_coords_csv(emb, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "id,label,x,y"
    cells = lines[1].split(",")
    assert cells[0] == "r1" and cells[1] == "1"
    assert float(cells[2]) == 0.125 and float(cells[3]) == -3.5
    assert float(lines[2].split(",")[2]) == 1e-7


def test_embedding2d_validation():
    with pytest.raises(ValidationError):
        Embedding2D(coords=np.zeros((2, 3)), labels=np.array([0, 1], np.uint8),
                    ids=("a", "b"))
    with pytest.raises(ValidationError):
        Embedding2D(coords=np.array([[np.nan, 0.0]]), labels=np.array([0], np.uint8),
                    ids=("a",))
