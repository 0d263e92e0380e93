import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdouble.lattice import CHARGE, FLUX, LatticeGeometry
from qdouble.noise import (
    FrameModel, NoiseLayout, NoiseModel, decoding_graph, enumerate_faults, estimate_logical_rate,
    fit_scaling_exponent, frame_trial, greedy_match, rows_to_csv, run_trial, wilson_interval,
)


def syndrome_of(geom, anyon, powers):
    """Anyon values created on the vacuum by clock (charge) or shift (flux) powers."""
    if anyon == CHARGE:
        return (-(geom.vertex_x_powers @ powers)) % geom.d
    return (geom.plaquette_z_powers @ powers) % geom.d


def test_noise_model_validation_and_rates():
    with pytest.raises(ValueError):
        NoiseModel(p_x=1.5)
    x, z = NoiseModel(0.2, 0.0).sample(20000, 3, np.random.default_rng(0))
    assert not z.any()
    assert np.count_nonzero(x) / 20000 == pytest.approx(0.2, abs=0.01)
    assert set(np.unique(x[x > 0])) == {1, 2}


def test_bfs_distance_matches_taxicab_without_blocks():
    geom = LatticeGeometry(5, 4, 3)
    g = decoding_graph(geom, CHARGE)
    for a in range(geom.n_sites):
        for b in range(geom.n_sites):
            assert g.dist[a, b] == geom.distance(a, b)


def test_blocked_spin_forces_detour():
    geom = LatticeGeometry(5, 5, 2)
    a, b = geom.site(1, 1), geom.site(1, 2)
    spin = geom.adjacent("p", a, b)[0]
    g = decoding_graph(geom, FLUX, (), (spin,))
    assert g.dist[a, b] == 3
    assert g.unit[a, b, spin] == 0


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([2, 3, 5]), st.sampled_from([CHARGE, FLUX]), st.integers(0, 2 ** 31))
def test_greedy_correction_clears_syndrome(d, anyon, seed):
    geom = LatticeGeometry(5, 4, d)
    rng = np.random.default_rng(seed)
    powers = np.where(rng.random(geom.n_spins) < 0.15, rng.integers(1, d, geom.n_spins), 0)
    vals = syndrome_of(geom, anyon, powers)
    corr = greedy_match(vals, decoding_graph(geom, anyon))
    assert not syndrome_of(geom, anyon, (powers + corr) % d).any()


def test_sinks_absorb_anyons():
    geom = LatticeGeometry(6, 6, 3)
    hole = geom.site(3, 3)
    g = decoding_graph(geom, CHARGE, (hole,))
    vals = np.zeros(geom.n_sites, dtype=np.int64)
    vals[geom.site(3, 4)] = 2
    corr = greedy_match(vals, g)
    assert np.count_nonzero(corr) == 1
    rest = (vals + syndrome_of(geom, CHARGE, corr)) % 3
    rest[hole] = 0
    assert not rest.any()


def test_cancelling_pair_preferred_at_equal_distance():
    geom = LatticeGeometry(9, 3, 3)
    vals = np.zeros(geom.n_sites, dtype=np.int64)
    vals[geom.site(1, 1)], vals[geom.site(2, 1)] = 1, 1
    vals[geom.site(3, 1)], vals[geom.site(5, 1)] = 2, 2
    corr = greedy_match(vals, decoding_graph(geom, CHARGE))
    assert not ((vals + syndrome_of(geom, CHARGE, corr)) % 3).any()
    # the cancelling pair (2,1)-(3,1) goes first, then (1,1) joins (5,1) along the same row
    assert np.flatnonzero(corr).tolist() == [geom.h_edge(x, 1) for x in range(1, 5)]


def test_layout_geometry():
    lay = NoiseLayout.default(3, 4, rows=3)
    assert (lay.Lx, lay.Ly) == (8, 12)
    assert len(lay.row_sites(0)) == 3
    assert len(lay.fixed_spins()) == 4
    with pytest.raises(ValueError):
        NoiseLayout(4, 4, 3, 3)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("rows", [1, 2])
def test_frame_path_matches_tableau(d, rows):
    lay = NoiseLayout.default(d, 2, rows)
    frame = FrameModel.build(lay)
    model = NoiseModel(0.06, 0.06)
    for t in range(12):
        f = frame_trial(frame, model, 5, t)
        rz = run_trial(lay, model, 5, t, "z")
        rx = run_trial(lay, model, 5, t, "x")
        assert rz.x_error == f.x_error, t
        assert rx.z_error == f.z_error, t


def test_noiseless_trial_has_no_error():
    lay = NoiseLayout.default(3, 2, 2)
    r = run_trial(lay, NoiseModel(), 1, 0, "x")
    assert (r.n_faults, r.x_error, r.z_error) == (0, 0, 0)


def test_single_faults_are_corrected():
    lay = NoiseLayout.default(3, 3)
    for ft in ("x", "z"):
        rep = enumerate_faults(lay, ft, 1)
        assert rep.checked == lay.geometry.n_spins * 2
        assert rep.failures == []


def test_rate_estimate_is_batch_independent():
    lay = NoiseLayout.default(2, 2)
    model = NoiseModel(0.05, 0.05)
    a = estimate_logical_rate(lay, model, 300, 9, chunk=300)
    b = estimate_logical_rate(lay, model, 300, 9, chunk=70)
    assert a == b


def test_wilson_interval():
    lo, hi = wilson_interval(10, 100)
    assert lo < 0.1 < hi
    assert wilson_interval(0, 50)[0] == 0.0
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_scaling_fit():
    ps = [0.01, 0.02, 0.04]
    rep = fit_scaling_exponent(ps, [3 * p ** 2 for p in ps])
    assert rep.exponent == pytest.approx(2.0)
    with pytest.raises(ValueError):
        fit_scaling_exponent(ps, [0.0, 0.1, 0.2])


def test_rows_to_csv():
    assert rows_to_csv([]) == ""
    assert rows_to_csv([{"a": 1, "b": 2.5}]) == "a,b\n1,2.5\n"
