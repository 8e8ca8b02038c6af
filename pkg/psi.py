"""
Structured points of the solution variety and the linear map Psi.

At the canonical point every channel has the block form

    H_kl = [[0, A_kl],
            [B_kl, C_kl]]

with decoders U_k = [I; 0] and precoders V_l = [I; 0], so U_k^T H_kl V_l = 0
for any blocks. Psi is the differential of the alignment equations at that
point, restricted to the free parts of the decoders and precoders:

    (dU_k, dV_l) -> dU_k^T B_kl + A_kl dV_l    for every link (k, l)

Rows are grouped per link in link order, columns per decoder (users 1..K)
and then per precoder (users 1..K).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from config import DEFAULTS
from linalg import commutation_matrix, kron, singular_values
from scenario import Scenario, ScenarioDims, dims, render

logger = logging.getLogger(__name__)

Link = Tuple[int, int]


@dataclass
class ChannelPoint:
    """
    Channel blocks for every link, plus the materialized channels and
    canonical filters once ``canonical_point`` has run.

    ``tag`` records the distribution the blocks came from: ``gaussian``,
    ``unit_sphere`` or ``stiefel``.
    """
    scenario: Scenario
    a: Dict[Link, np.ndarray]
    b: Dict[Link, np.ndarray]
    c: Optional[Dict[Link, np.ndarray]] = None
    tag: str = "gaussian"
    h: Optional[Dict[Link, np.ndarray]] = None
    u: Optional[List[np.ndarray]] = None
    v: Optional[List[np.ndarray]] = None

    def channel(self, k: int, l: int) -> np.ndarray:
        """The full N_k x M_l channel H_kl."""
        rx, tx = self.scenario.users[k], self.scenario.users[l]
        h = np.zeros((rx.N, tx.M), dtype=np.complex128)
        h[:rx.d, tx.d:] = self.a[(k, l)]
        h[rx.d:, :tx.d] = self.b[(k, l)]
        if self.c is not None:
            h[rx.d:, tx.d:] = self.c[(k, l)]
        return h


@dataclass
class PsiMatrix:
    matrix: np.ndarray
    row_index: Dict[Link, int]
    col_index: Dict[Tuple[str, int], int]


def block_shapes(sc: Scenario, k: int, l: int) -> Tuple[Tuple[int, int], ...]:
    """Shapes of (A_kl, B_kl, C_kl)."""
    rx, tx = sc.users[k], sc.users[l]
    return (
        (rx.d, tx.M - tx.d),
        (rx.N - rx.d, tx.d),
        (rx.N - rx.d, tx.M - tx.d),
    )


def check_shapes(sc: Scenario, pt: ChannelPoint) -> None:
    """Raise ``ValueError`` unless every block of ``pt`` fits ``sc``."""
    for k, l in sc.links:
        a_shape, b_shape, c_shape = block_shapes(sc, k, l)
        named = [("A", pt.a, a_shape), ("B", pt.b, b_shape)]
        if pt.c is not None:
            named.append(("C", pt.c, c_shape))
        for name, blocks, shape in named:
            if (k, l) not in blocks:
                raise ValueError(f"missing block {name} for link ({k + 1},{l + 1})")
            got = np.shape(blocks[(k, l)])
            if got != shape:
                raise ValueError(
                    f"block {name} of link ({k + 1},{l + 1}) has shape {got}, expected {shape}"
                )


def canonical_point(sc: Scenario, blocks: ChannelPoint) -> ChannelPoint:
    """
    Materialize the channels H_kl and the canonical filters U_k = [I; 0],
    V_l = [I; 0] for the given blocks.

    Raises:
        ValueError: on a shape mismatch, or if the point does not satisfy
            the alignment equations.
    """
    check_shapes(sc, blocks)
    h = {(k, l): blocks.channel(k, l) for k, l in sc.links}
    u = [np.eye(usr.N, usr.d, dtype=np.complex128) for usr in sc.users]
    v = [np.eye(usr.M, usr.d, dtype=np.complex128) for usr in sc.users]
    pt = ChannelPoint(
        scenario=sc, a=blocks.a, b=blocks.b, c=blocks.c, tag=blocks.tag, h=h, u=u, v=v,
    )
    residual = alignment_residual(pt)
    if residual != 0.0:
        raise ValueError(f"point is off the solution variety (residual {residual:g})")
    return pt


def alignment_residual(pt: ChannelPoint) -> float:
    """max over links of ||U_k^T H_kl V_l||_F."""
    if pt.h is None:
        raise ValueError("point has no materialized channels; call canonical_point first")
    return max(
        float(np.linalg.norm(pt.u[k].T @ pt.h[(k, l)] @ pt.v[l]))
        for k, l in pt.scenario.links
    )


def _partitions(sc: Scenario) -> Tuple[Dict[Link, int], Dict[Tuple[str, int], int]]:
    row_index: Dict[Link, int] = {}
    offset = 0
    for k, l in sc.links:
        row_index[(k, l)] = offset
        offset += sc.users[k].d * sc.users[l].d

    col_index: Dict[Tuple[str, int], int] = {}
    offset = 0
    for k, usr in enumerate(sc.users):
        col_index[("decoder", k)] = offset
        offset += (usr.N - usr.d) * usr.d
    for l, usr in enumerate(sc.users):
        col_index[("precoder", l)] = offset
        offset += (usr.M - usr.d) * usr.d
    return row_index, col_index


def assemble_psi(sc: Scenario, pt: ChannelPoint) -> PsiMatrix:
    """
    Build Psi block by block from Kronecker products.

    For link (k, l) the decoder block is (B_kl^T kron I_dk) K_{N_k-d_k, d_k},
    placed in column partition k, and the precoder block is
    (I_dl kron A_kl), placed in column partition K + l.
    """
    check_shapes(sc, pt)
    dm = dims(sc)
    row_index, col_index = _partitions(sc)
    psi = np.zeros((dm.psi_rows, dm.psi_cols), dtype=np.complex128)

    for k, l in sc.links:
        rx, tx = sc.users[k], sc.users[l]
        r0 = row_index[(k, l)]
        r1 = r0 + rx.d * tx.d

        if rx.N > rx.d:
            dec = kron(pt.b[(k, l)].T, np.eye(rx.d)) @ commutation_matrix(rx.N - rx.d, rx.d)
            c0 = col_index[("decoder", k)]
            psi[r0:r1, c0:c0 + dec.shape[1]] = dec

        if tx.M > tx.d:
            pre = kron(np.eye(tx.d), pt.a[(k, l)])
            c0 = col_index[("precoder", l)]
            psi[r0:r1, c0:c0 + pre.shape[1]] = pre

    return PsiMatrix(matrix=psi, row_index=row_index, col_index=col_index)


class PsiLayout:
    """
    Flat storage for channel blocks and a scatter map straight into Psi.

    Each link owns one contiguous segment of the sample vector holding A_kl,
    B_kl and C_kl in that order (row-major within a block). Every nonzero
    entry of Psi is a copy of one A or B entry, so Psi is a single gather.
    """

    def __init__(self, sc: Scenario):
        self.scenario = sc
        self.dims: ScenarioDims = dims(sc)
        self.row_index, self.col_index = _partitions(sc)

        self.slices: Dict[Link, Tuple[slice, slice, slice]] = {}
        starts, sizes = [], []
        targets, sources = [], []
        offset = 0
        cols = self.dims.psi_cols

        for k, l in sc.links:
            rx, tx = sc.users[k], sc.users[l]
            (ar, ac), (br, bc), (cr, cc) = block_shapes(sc, k, l)
            a0 = offset
            b0 = a0 + ar * ac
            c0 = b0 + br * bc
            end = c0 + cr * cc
            self.slices[(k, l)] = (slice(a0, b0), slice(b0, c0), slice(c0, end))
            starts.append(a0)
            sizes.append(end - a0)
            offset = end

            r0 = self.row_index[(k, l)]
            dk, dl = rx.d, tx.d

            # decoder block: Psi[r0 + p + dk*q, cU + i + nk*p] = B[i, q]
            nk = rx.N - rx.d
            i, q, p = np.meshgrid(np.arange(nk), np.arange(dl), np.arange(dk), indexing="ij")
            cu = self.col_index[("decoder", k)]
            targets.append(((r0 + p + dk * q) * cols + cu + i + nk * p).ravel())
            sources.append((b0 + i * dl + q).ravel())

            # precoder block: Psi[r0 + p + dk*q, cV + j + ml*q] = A[p, j]
            ml = tx.M - tx.d
            p, j, q = np.meshgrid(np.arange(dk), np.arange(ml), np.arange(dl), indexing="ij")
            cv = self.col_index[("precoder", l)]
            targets.append(((r0 + p + dk * q) * cols + cv + j + ml * q).ravel())
            sources.append((a0 + p * ml + j).ravel())

        self.size = offset
        self.link_starts = np.asarray(starts, dtype=np.intp)
        self.link_sizes = np.asarray(sizes, dtype=np.intp)
        self._target = np.concatenate(targets)
        self._source = np.concatenate(sources)

    def psi_from_flat(self, sample: np.ndarray) -> np.ndarray:
        out = np.zeros(self.dims.psi_rows * self.dims.psi_cols, dtype=np.complex128)
        out[self._target] = sample[self._source]
        return out.reshape(self.dims.psi_rows, self.dims.psi_cols)

    def point_from_flat(self, sample: np.ndarray, tag: str = "gaussian") -> ChannelPoint:
        sc = self.scenario
        a, b, c = {}, {}, {}
        for link, (sa, sb, sc_) in self.slices.items():
            a_shape, b_shape, c_shape = block_shapes(sc, *link)
            a[link] = sample[sa].reshape(a_shape)
            b[link] = sample[sb].reshape(b_shape)
            c[link] = sample[sc_].reshape(c_shape)
        return ChannelPoint(scenario=sc, a=a, b=b, c=c, tag=tag)

    def flat_from_point(self, pt: ChannelPoint) -> np.ndarray:
        check_shapes(self.scenario, pt)
        out = np.zeros(self.size, dtype=np.complex128)
        for link, (sa, sb, sc_) in self.slices.items():
            out[sa] = np.ravel(pt.a[link])
            out[sb] = np.ravel(pt.b[link])
            if pt.c is not None:
                out[sc_] = np.ravel(pt.c[link])
        return out

    def block_index(self, which: str) -> np.ndarray:
        """
        Positions of every A (``which="a"``) or B block as one
        (links, rows, cols) array; all links must share the block shape.
        """
        pick = {"a": 0, "b": 1}[which]
        shapes = {block_shapes(self.scenario, *link)[pick] for link in self.slices}
        if len(shapes) != 1:
            raise ValueError(f"{which.upper()} blocks differ in shape across links")
        (shape,) = shapes
        return np.stack([
            np.arange(s[pick].start, s[pick].stop).reshape(shape)
            for s in self.slices.values()
        ])


@lru_cache(maxsize=32)
def psi_layout(sc: Scenario) -> PsiLayout:
    return PsiLayout(sc)


class Verdict(str, Enum):
    IMPROPER = "improper"
    INFEASIBLE = "infeasible"
    FEASIBLE = "feasible"


@dataclass(frozen=True)
class FeasibilityResult:
    verdict: Verdict
    dims: ScenarioDims
    sigma_ratios: Tuple[float, ...] = ()

    @property
    def sigma_ratio(self) -> Optional[float]:
        """Median sigma_min / sigma_max over the draws."""
        if not self.sigma_ratios:
            return None
        return float(np.median(self.sigma_ratios))


def feasibility_test(
    sc: Scenario,
    seed: int = DEFAULTS.seed,
    draws: int = 1,
    rank_rtol: float = DEFAULTS.rank_rtol,
) -> FeasibilityResult:
    """
    Decide feasibility from the rank of Psi at random Gaussian points.

    Improper scenarios (s < 0) are reported without drawing. Otherwise Psi
    must have full row rank, judged by sigma_min / sigma_max > ``rank_rtol``;
    with several draws the majority verdict wins.
    """
    from sampling import RngStream, sample_gaussian_point

    dm = dims(sc)
    if dm.s < 0:
        return FeasibilityResult(verdict=Verdict.IMPROPER, dims=dm)
    if draws < 1:
        raise ValueError(f"draws must be >= 1, got {draws}")

    ratios = []
    for stream in range(draws):
        pt = sample_gaussian_point(sc, RngStream(seed, stream))
        sv = singular_values(assemble_psi(sc, pt).matrix)
        ratios.append(float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0)

    votes = sum(r > rank_rtol for r in ratios)
    verdict = Verdict.FEASIBLE if 2 * votes > draws else Verdict.INFEASIBLE
    logger.info("%s: %s (sigma ratios %s)", render(sc), verdict.value, ratios)
    return FeasibilityResult(verdict=verdict, dims=dm, sigma_ratios=tuple(ratios))
