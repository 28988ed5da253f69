import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st

from risiac.array import Codebook, UpaGeometry, array_response, beamsteering_codebook, is_unit_modulus
from risiac.beam import (GainReport, ap_side_beam, beam_gains, design_interaction_vector, evaluate_topk,
                         exhaustive_search, rank_beams, ue_side_beam, write_gain_csv)
from risiac.channel import composite_channel, equal_gain_bound

GEOM = UpaGeometry(8, 8, 0.005)
N = GEOM.n_elements
BORESIGHT = (0.0, np.pi / 2)
seeds = st.integers(0, 2**32 - 1)


def angles_from_cosines(u_h, u_v):
    u_x = np.sqrt(1.0 - u_h**2 - u_v**2)
    return float(np.arctan2(u_h, u_x)), float(np.arccos(u_v))


def random_channel(rng, n=N):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


def random_codebook(rng, n=N, m=64):
    return Codebook(np.exp(1j * rng.uniform(0, 2 * np.pi, (n, m))))


# ---------------------------------------------------------------------------
# interaction vector design


def test_ap_beam_at_boresight_is_all_ones():
    assert np.allclose(ap_side_beam(GEOM, BORESIGHT), np.ones(N))
    assert np.allclose(design_interaction_vector(GEOM, BORESIGHT, BORESIGHT), np.ones(N))


@given(st.floats(-1.4, 1.4), st.floats(0.2, 2.9))
def test_ap_beam_is_unit_modulus(az, ze):
    assert is_unit_modulus(ap_side_beam(GEOM, (az, ze)), tol=1e-12)


def test_ap_beam_collects_coherent_los_gain():
    alpha = 0.03 * np.exp(0.4j)
    ap = (0.6, 1.3)
    h_t = alpha * array_response(GEOM, *ap)
    assert abs(h_t @ ap_side_beam(GEOM, ap)) == pytest.approx(abs(alpha) * N, rel=1e-12)


@given(st.floats(-1.2, 1.2), st.floats(0.4, 2.7), st.floats(-1.2, 1.2), st.floats(0.4, 2.7))
def test_design_vector_is_hadamard_of_side_beams(a1, z1, a2, z2):
    weights = design_interaction_vector(GEOM, (a1, z1), (a2, z2))
    assert np.allclose(weights, ap_side_beam(GEOM, (a1, z1)) * ue_side_beam(GEOM, (a2, z2)), atol=1e-12)


@given(seeds)
def test_two_los_channel_reaches_equal_gain_bound(seed):
    rng = np.random.default_rng(seed)
    ap = (rng.uniform(-1, 1), rng.uniform(0.5, 2.6))
    ue = (rng.uniform(-1, 1), rng.uniform(0.5, 2.6))
    h_t = complex(*rng.normal(size=2)) * array_response(GEOM, *ap)
    h_r = complex(*rng.normal(size=2)) * array_response(GEOM, *ue)
    weights = design_interaction_vector(GEOM, ap, ue)
    h = composite_channel(h_t, h_r)
    assert abs(h @ weights) == pytest.approx(equal_gain_bound(h), rel=1e-10)


# ---------------------------------------------------------------------------
# ranking


def test_codebook_beam_ranks_itself_first():
    cb = beamsteering_codebook(GEOM, 2, 2)
    for m in (0, 17, 100, len(cb) - 1):
        ranking = rank_beams(cb.beam(m), cb)
        assert ranking.indices[0] == m
        assert ranking.similarities[0] == pytest.approx(N)


def test_dft_spaced_ula_beams_are_orthogonal():
    ula = UpaGeometry(16, 1, 0.005)
    cb = beamsteering_codebook(ula)
    ranking = rank_beams(cb.beam(3), cb)
    sims = dict(ranking.pairs())
    assert sims[3] == pytest.approx(16)
    for m in range(16):
        if m != 3:
            assert sims[m] == pytest.approx(0.0, abs=1e-9)


def test_ranking_is_sorted_with_index_tiebreak():
    ula = UpaGeometry(16, 1, 0.005)
    # all other beams tie at zero similarity, so they follow in ascending index order
    ranking = rank_beams(beamsteering_codebook(ula).beam(5), beamsteering_codebook(ula))
    assert ranking.indices.tolist() == [5] + [m for m in range(16) if m != 5]
    beams = np.ones((4, 3), dtype=complex)
    assert rank_beams(np.ones(4), Codebook(beams)).indices.tolist() == [0, 1, 2]


@given(seeds)
def test_ranking_invariants_and_brute_force_top1(seed):
    rng = np.random.default_rng(seed)
    cb = random_codebook(rng)
    weights = np.exp(1j * rng.uniform(0, 2 * np.pi, N))
    ranking = rank_beams(weights, cb)
    sims = ranking.similarities
    assert sorted(ranking.indices.tolist()) == list(range(len(cb)))
    assert np.all(np.diff(sims) <= 1e-9 * sims[0])
    brute = [abs(sum(np.conj(weights[n]) * cb.beams[n, m] for n in range(N))) for m in range(len(cb))]
    assert ranking.indices[0] == int(np.argmax(brute))
    assert sims[0] == pytest.approx(max(brute), rel=1e-12)


@given(seeds, st.floats(0, 2 * np.pi))
def test_global_phase_leaves_ranking_unchanged(seed, phi):
    rng = np.random.default_rng(seed)
    cb = beamsteering_codebook(UpaGeometry(4, 4, 0.005), 2, 2)
    weights = np.exp(1j * rng.uniform(0, 2 * np.pi, 16))
    base = rank_beams(weights, cb)
    rotated = rank_beams(np.exp(1j * phi) * weights, cb)
    assert np.array_equal(base.indices, rotated.indices)


def test_rank_rejects_length_mismatch():
    with pytest.raises(ValueError, match="length"):
        rank_beams(np.ones(5), beamsteering_codebook(GEOM))


# ---------------------------------------------------------------------------
# exhaustive search and top-k evaluation


def test_exhaustive_finds_the_equal_gain_beam():
    rng = np.random.default_rng(2)
    h_t, h_r = random_channel(rng), random_channel(rng)
    h = composite_channel(h_t, h_r)
    beams = np.exp(1j * rng.uniform(0, 2 * np.pi, (N, 20)))
    beams[:, 13] = np.exp(-1j * np.angle(h))
    idx, gain = exhaustive_search(h_t, h_r, Codebook(beams))
    assert idx == 13
    assert gain == pytest.approx(np.sum(np.abs(h)))


def test_single_beam_codebook():
    rng = np.random.default_rng(3)
    cb = Codebook(np.exp(1j * rng.uniform(0, 2 * np.pi, (N, 1))))
    assert exhaustive_search(random_channel(rng), random_channel(rng), cb)[0] == 0


@given(seeds)
def test_exhaustive_matches_linear_scan(seed):
    rng = np.random.default_rng(seed)
    h_t, h_r = random_channel(rng), random_channel(rng)
    cb = random_codebook(rng)
    best_idx, best_gain = 0, -1.0
    for m in range(len(cb)):
        g = abs(sum(h_r[n] * h_t[n] * cb.beams[n, m] for n in range(N)))
        if g > best_gain:
            best_idx, best_gain = m, g
    idx, gain = exhaustive_search(h_t, h_r, cb)
    assert idx == best_idx
    assert gain == pytest.approx(best_gain, rel=1e-12)


def test_structured_codebook_gains_match_dense_product():
    rng = np.random.default_rng(6)
    cb = beamsteering_codebook(UpaGeometry(4, 6, 0.005), 2, 3)
    h_t, h_r = random_channel(rng, 24), random_channel(rng, 24)
    dense = np.abs(composite_channel(h_t, h_r) @ cb.beams)
    assert np.allclose(beam_gains(h_t, h_r, cb), dense, rtol=1e-12)


@given(seeds)
def test_topk_report_properties(seed):
    rng = np.random.default_rng(seed)
    cb = beamsteering_codebook(UpaGeometry(4, 4, 0.005), 2, 2)
    h_t, h_r = random_channel(rng, 16), random_channel(rng, 16)
    ranking = rank_beams(np.exp(1j * rng.uniform(0, 2 * np.pi, 16)), cb)
    k_list = [1, 5, 25, len(cb)]
    report = evaluate_topk(h_t, h_r, ranking, cb, k_list)
    assert np.all(np.diff(report.topk_gain) >= 0)
    assert np.all((report.topk_gain >= 0) & (report.topk_gain <= 1 + 1e-9))
    assert report.topk_gain[-1] == report.exhaustive_gain
    _, best = exhaustive_search(h_t, h_r, cb)
    h = composite_channel(h_t, h_r)
    assert report.exhaustive_gain == pytest.approx((best / equal_gain_bound(h)) ** 2, rel=1e-12)
    assert report.overhead_ratio.tolist() == [k / 64 for k in k_list]


def test_on_grid_los_top1_equals_exhaustive():
    cb = beamsteering_codebook(GEOM, 2, 2)
    ap_cos = (0.3, -0.2)
    target = (cb.cos_h[11], cb.cos_v[9])
    ap = angles_from_cosines(*ap_cos)
    ue = angles_from_cosines(target[0] - ap_cos[0], target[1] - ap_cos[1])
    h_t = 0.2 * array_response(GEOM, *ap)
    h_r = 0.7j * array_response(GEOM, *ue)
    ranking = rank_beams(design_interaction_vector(GEOM, ap, ue), cb)
    report = evaluate_topk(h_t, h_r, ranking, cb, [1])
    assert ranking.indices[0] == 11 + cb.m_h * 9
    assert report.topk_gain[0] == report.exhaustive_gain
    assert report.exhaustive_gain == pytest.approx(1.0)


def test_overhead_of_top25_on_large_codebook():
    cb = beamsteering_codebook(UpaGeometry(40, 40, 0.005), 4, 4)
    assert len(cb) == 25600
    report = GainReport((25,), np.array([0.5]), 0.6, len(cb))
    assert report.overhead_ratio[0] < 0.001


def test_k_outside_codebook_is_rejected():
    cb = beamsteering_codebook(UpaGeometry(2, 2, 0.005))
    ranking = rank_beams(np.ones(4), cb)
    with pytest.raises(ValueError, match="k"):
        evaluate_topk(np.ones(4), np.ones(4), ranking, cb, [5])
    with pytest.raises(ValueError):
        evaluate_topk(np.ones(4), np.ones(4), ranking, cb, [0])


def test_gain_csv_layout(tmp_path):
    report = GainReport((1, 4), np.array([0.5, 1.0]), 1.0, 8)
    path = tmp_path / "g.csv"
    write_gain_csv(report, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["k", "normalized_gain_db", "overhead_ratio", "exhaustive_gain_db"]
    assert rows[1][0] == "1" and float(rows[1][1]) == pytest.approx(-3.0103, abs=1e-4)
    assert rows[2] == ["4", "0", "0.5", "0"]
    write_gain_csv(None, path)
    assert path.read_text() == "k,normalized_gain_db,overhead_ratio,exhaustive_gain_db\n"
