"""
Random channel points for the two integration domains.

Every sample index owns an independent stream derived from the master seed,
so a run draws the same points whatever the number of workers.
"""

from dataclasses import dataclass

import numpy as np

from psi import ChannelPoint, PsiLayout, psi_layout
from scenario import HypothesisError, Scenario, render

_HALF_SQRT = np.sqrt(0.5)


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: int

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))
        return np.random.default_rng(seq)


def complex_normal(gen: np.random.Generator, shape) -> np.ndarray:
    """Standard circular complex Gaussian entries (E|z|^2 = 1)."""
    shape = tuple(np.atleast_1d(shape))
    pairs = gen.standard_normal(size=(*shape, 2))
    return pairs.view(np.complex128)[..., 0] * _HALF_SQRT


def haar_frames(gen: np.random.Generator, count: int, rows: int, cols: int) -> np.ndarray:
    """
    ``count`` Haar-distributed orthonormal ``cols``-frames in C^rows, shape
    (count, rows, cols).

    Plain QR of a Gaussian matrix is not Haar; each column of Q is rotated by
    the phase of the matching diagonal entry of R.
    """
    g = complex_normal(gen, (count, rows, cols))
    q, r = np.linalg.qr(g)
    phases = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (phases / np.abs(phases))[..., None, :]


def gaussian_flat(layout: PsiLayout, gen: np.random.Generator) -> np.ndarray:
    return complex_normal(gen, layout.size)


def sphere_flat(layout: PsiLayout, gen: np.random.Generator) -> np.ndarray:
    """Gaussian blocks, each channel H_kl scaled to unit Frobenius norm."""
    z = complex_normal(gen, layout.size)
    power = np.add.reduceat(np.abs(z) ** 2, layout.link_starts)
    return z / np.repeat(np.sqrt(power), layout.link_sizes)


def stiefel_flat(layout: PsiLayout, gen: np.random.Generator) -> np.ndarray:
    """A_kl^* and B_kl Haar frames, C_kl = 0 (square symmetric scenarios)."""
    a_index = layout.block_index("a")
    b_index = layout.block_index("b")
    links, d, rows = a_index.shape
    frames = haar_frames(gen, 2 * links, rows, d)
    out = np.zeros(layout.size, dtype=np.complex128)
    out[a_index] = frames[:links].conj().transpose(0, 2, 1)
    out[b_index] = frames[links:]
    return out


def require_stiefel_domain(sc: Scenario) -> None:
    if not sc.is_square_symmetric:
        raise HypothesisError(f"{render(sc)} is not square symmetric (N x N, d)^K")
    u = sc.users[0]
    if u.N < 2 * u.d:
        raise HypothesisError(f"{render(sc)} needs N >= 2d for Stiefel sampling")


def sample_gaussian_point(sc: Scenario, rng: RngStream) -> ChannelPoint:
    layout = psi_layout(sc)
    return layout.point_from_flat(gaussian_flat(layout, rng.generator()), tag="gaussian")


def sample_sphere_point(sc: Scenario, rng: RngStream) -> ChannelPoint:
    """Uniform point of the structured channels with ||H_kl||_F = 1 per link."""
    layout = psi_layout(sc)
    return layout.point_from_flat(sphere_flat(layout, rng.generator()), tag="unit_sphere")


def sample_stiefel_point(sc: Scenario, rng: RngStream) -> ChannelPoint:
    """Uniform point with A_kl^*, B_kl in the Stiefel manifold and C_kl = 0."""
    require_stiefel_domain(sc)
    layout = psi_layout(sc)
    return layout.point_from_flat(stiefel_flat(layout, rng.generator()), tag="stiefel")
