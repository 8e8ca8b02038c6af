"""
Tests for the random streams and the two integration domains.
"""

import numpy as np
import pytest
from scipy.stats import ks_2samp

from psi import psi_layout
from sampling import (
    RngStream,
    complex_normal,
    haar_frames,
    require_stiefel_domain,
    sample_gaussian_point,
    sample_sphere_point,
    sample_stiefel_point,
    sphere_flat,
)
from scenario import HypothesisError, parse_scenario


def test_streams_replay_bitwise():
    sc = parse_scenario("(5x5,2)^4")
    first = psi_layout(sc).flat_from_point(sample_sphere_point(sc, RngStream(42, 7)))
    again = psi_layout(sc).flat_from_point(sample_sphere_point(sc, RngStream(42, 7)))
    assert np.array_equal(first, again)


def test_streams_are_distinct():
    gen_a = RngStream(42, 0).generator()
    gen_b = RngStream(42, 1).generator()
    gen_c = RngStream(43, 0).generator()
    a, b, c = (complex_normal(g, 8) for g in (gen_a, gen_b, gen_c))
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_complex_normal_has_unit_power():
    z = complex_normal(np.random.default_rng(0), 200_000)
    assert z.dtype == np.complex128
    assert abs(np.mean(np.abs(z) ** 2) - 1.0) < 0.02
    assert abs(np.mean(z.real ** 2) - 0.5) < 0.02


def test_haar_frames_are_orthonormal():
    frames = haar_frames(np.random.default_rng(1), 50, 6, 3)
    assert frames.shape == (50, 6, 3)
    gram = np.conj(np.transpose(frames, (0, 2, 1))) @ frames
    assert np.max(np.abs(gram - np.eye(3))) <= 1e-12


def test_haar_frames_have_uniform_phase():
    frames = haar_frames(np.random.default_rng(2), 20_000, 4, 1)
    assert abs(np.mean(frames[:, 0, 0])) < 0.02
    assert abs(np.mean(np.abs(frames[:, 0, 0]) ** 2) - 0.25) < 0.01


def test_sphere_channels_have_unit_norm():
    sc = parse_scenario("(2x3,1)(3x2,1)(2x4,1)(2x2,1)")
    pt = sample_sphere_point(sc, RngStream(0, 3))
    assert pt.tag == "unit_sphere"
    for k, l in sc.links:
        assert abs(np.linalg.norm(pt.channel(k, l)) - 1.0) <= 1e-14


def test_sphere_flat_has_unit_norm_per_link():
    sc = parse_scenario("(5x5,2)^4")
    layout = psi_layout(sc)
    flat = sphere_flat(layout, RngStream(1, 1).generator())
    for start, size in zip(layout.link_starts, layout.link_sizes):
        assert abs(np.linalg.norm(flat[start:start + size]) - 1.0) <= 1e-14


@pytest.mark.parametrize("text", ["(2x2,1)^3", "(4x4,2)^3", "(5x5,2)^4", "(6x6,3)^3"])
def test_stiefel_blocks(text):
    sc = parse_scenario(text)
    pt = sample_stiefel_point(sc, RngStream(9, 0))
    d = sc.users[0].d
    assert pt.tag == "stiefel"
    for link in sc.links:
        a, b = pt.a[link], pt.b[link]
        assert np.max(np.abs(a @ a.conj().T - np.eye(d))) <= 1e-12
        assert np.max(np.abs(b.conj().T @ b - np.eye(d))) <= 1e-12
        assert not np.any(pt.c[link])


def test_gaussian_point_fills_every_block():
    sc = parse_scenario("(4x4,2)^3")
    pt = sample_gaussian_point(sc, RngStream(0, 0))
    assert pt.tag == "gaussian"
    assert all(np.all(pt.c[link] != 0) for link in sc.links)


def test_stiefel_domain_hypotheses():
    with pytest.raises(HypothesisError, match="square symmetric"):
        require_stiefel_domain(parse_scenario("(3x5,2)^3"))
    with pytest.raises(HypothesisError, match="N >= 2d"):
        require_stiefel_domain(parse_scenario("(3x3,2)^2"))
    with pytest.raises(HypothesisError):
        sample_stiefel_point(parse_scenario("(5x5,2)^2(4x6,2)^2"), RngStream(0, 0))


def test_sphere_entries_share_the_unit_power():
    layout = psi_layout(parse_scenario("(2x2,1)^3"))
    gen = np.random.default_rng(5)
    power = np.mean([np.abs(sphere_flat(layout, gen)) ** 2 for _ in range(20_000)], axis=0)
    # three free entries per link
    assert layout.size == 18
    assert np.max(np.abs(power - 1.0 / 3.0)) < 0.01


def test_haar_frames_are_unitarily_invariant():
    gen = np.random.default_rng(8)
    w = haar_frames(gen, 1, 4, 4)[0]
    q = haar_frames(gen, 5_000, 4, 2)
    rotated = w @ haar_frames(gen, 5_000, 4, 2)
    for stat in (lambda f: f[:, 0, 0].real, lambda f: np.abs(f[:, 1, 1]) ** 2):
        assert ks_2samp(stat(q), stat(rotated)).pvalue > 1e-3
