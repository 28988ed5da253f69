"""Communication beam design from detected angles and top-k beam selection."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from risiac.array import Codebook, UpaGeometry, array_response
from risiac.channel import composite_channel, equal_gain_bound


def ap_side_beam(geom: UpaGeometry, ap_angles: tuple[float, float]) -> np.ndarray:
    """Conjugate steering toward the AP, matching its LoS path."""
    return np.conj(array_response(geom, *ap_angles))


def ue_side_beam(geom: UpaGeometry, ue_angles: tuple[float, float]) -> np.ndarray:
    return np.conj(array_response(geom, *ue_angles))


def design_interaction_vector(geom: UpaGeometry, ap_angles, ue_angles) -> np.ndarray:
    """Conjugate of ``a(ap) * a(ue)``: the AP-side beam times the UE-side beam."""
    return ap_side_beam(geom, ap_angles) * ue_side_beam(geom, ue_angles)


@dataclass(frozen=True, eq=False)
class BeamRanking:
    """Codebook indices sorted by descending similarity (ties: ascending index)."""

    indices: np.ndarray
    similarities: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    def top(self, k: int) -> np.ndarray:
        return self.indices[:k]

    def pairs(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.similarities.tolist()))


_TIE_RESOLUTION = 1e-10  # relative; similarities closer than this count as tied


def _descending(values: np.ndarray) -> np.ndarray:
    scale = values.max() if values.size and values.max() > 0 else 1.0
    key = np.round(values / (scale * _TIE_RESOLUTION))
    # stable sort keeps tied entries in ascending index order
    return np.argsort(-key, kind="stable")


def rank_beams(weights: np.ndarray, codebook: Codebook) -> BeamRanking:
    """Rank codebook beams by ``|conj(weights) . beam|``."""
    weights = np.asarray(weights)
    if weights.shape != (codebook.n_elements,):
        raise ValueError("interaction vector length does not match the codebook")
    sim = np.abs(codebook.correlate(np.conj(weights)))
    order = _descending(sim)
    return BeamRanking(order, sim[order])


def beam_gains(ap_channel, ue_channel, codebook: Codebook) -> np.ndarray:
    """``|(ue_channel * ap_channel) . beam|`` for every beam."""
    return np.abs(codebook.correlate(composite_channel(ap_channel, ue_channel)))


def exhaustive_search(ap_channel, ue_channel, codebook: Codebook) -> tuple[int, float]:
    """Best codebook beam by full sweep; ties go to the lowest index."""
    gains = beam_gains(ap_channel, ue_channel, codebook)
    idx = int(np.argmax(gains))
    return idx, float(gains[idx])


def to_db(ratio) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(ratio)


@dataclass(frozen=True, eq=False)
class GainReport:
    """Power gains normalised by the squared equal-gain bound.

    ``topk_gain[i]`` is the best normalised gain among the ``k_list[i]``
    highest-ranked beams; ``overhead_ratio[i] = k_list[i] / codebook_size``.
    """

    k_list: tuple
    topk_gain: np.ndarray
    exhaustive_gain: float
    codebook_size: int

    @property
    def overhead_ratio(self) -> np.ndarray:
        return np.asarray(self.k_list, dtype=float) / self.codebook_size

    @property
    def topk_gain_db(self) -> np.ndarray:
        return to_db(self.topk_gain)

    @property
    def exhaustive_gain_db(self) -> float:
        return float(to_db(self.exhaustive_gain))

    def rows(self) -> list[dict]:
        return [
            {
                "k": int(k),
                "normalized_gain_db": float(g),
                "overhead_ratio": float(r),
                "exhaustive_gain_db": self.exhaustive_gain_db,
            }
            for k, g, r in zip(self.k_list, self.topk_gain_db, self.overhead_ratio)
        ]


def evaluate_topk(ap_channel, ue_channel, ranking: BeamRanking, codebook: Codebook, k_list) -> GainReport:
    k_list = tuple(int(k) for k in k_list)
    if any(k < 1 or k > len(codebook) for k in k_list):
        raise ValueError(f"every k must lie in [1, {len(codebook)}]")
    h = composite_channel(ap_channel, ue_channel)
    bound = equal_gain_bound(h)
    gains = beam_gains(ap_channel, ue_channel, codebook)
    norm = (gains / bound) ** 2 if bound > 0 else np.zeros_like(gains)
    ranked = norm[ranking.indices]
    best_so_far = np.maximum.accumulate(ranked)
    topk = np.array([best_so_far[k - 1] for k in k_list])
    return GainReport(k_list, topk, float(norm.max()), len(codebook))


def write_gain_csv(report: Optional[GainReport], path) -> None:
    """One row per k; ``None`` writes the header only (no contributing samples)."""
    fields = ["k", "normalized_gain_db", "overhead_ratio", "exhaustive_gain_db"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in (report.rows() if report is not None else []):
            writer.writerow({key: (f"{val:.10g}" if isinstance(val, float) else val)
                             for key, val in row.items()})
