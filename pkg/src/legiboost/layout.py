"""Asset placement in low-saliency regions.

Assets are placed greedily in descending area order. Each asset scans a
candidate grid and takes the position maximizing

    mean(1 - H over bbox) + 0.25 * d_min / diag - 10 * overlap_fraction

where d_min is the distance to the nearest already-placed or fixed
element center (0 when there is none). Overlap-free candidates are always
preferred; if none exists the minimal-overlap position is returned with
``degraded`` set. Score ties keep the first candidate in row-major scan
order (top-left wins).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DISPERSION_WEIGHT = 0.25
OVERLAP_WEIGHT = 10.0

BBox = tuple[int, int, int, int]  # (x, y, w, h)


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class Placement:
    asset_id: str
    bbox: BBox
    score: float
    degraded: bool = False


@dataclass(frozen=True)
class LayoutProposal:
    placements: tuple[Placement, ...]
    total_score: float


@dataclass(frozen=True)
class SizedAsset:
    """Minimal placement request: an id and a pixel size."""

    asset_id: str
    width: int
    height: int
    area: int = field(init=False)

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"asset {self.asset_id!r} has empty size")
        object.__setattr__(self, "area", self.width * self.height)


def candidate_grid(canvas_w: int, canvas_h: int, w: int, h: int) -> tuple[range, range]:
    """Row-major candidate positions for a w x h box on the canvas."""
    stride = max(1, min(canvas_w, canvas_h) // 32)
    return range(0, canvas_h - h + 1, stride), range(0, canvas_w - w + 1, stride)


def _center(b: BBox) -> tuple[float, float]:
    return (b[0] + b[2] / 2.0, b[1] + b[3] / 2.0)


def _min_center_distance(b: BBox, others: list[BBox]) -> float:
    if not others:
        return 0.0
    cx, cy = _center(b)
    return min(math.hypot(cx - ox, cy - oy) for ox, oy in map(_center, others))


def placement_score(
    inv_map: np.ndarray,
    occupied: np.ndarray,
    bbox: BBox,
    anchors: list[BBox],
    diag: float,
) -> tuple[float, float]:
    """(score, overlap_fraction) of one candidate position."""
    x, y, w, h = bbox
    calm = float(np.mean(inv_map[y : y + h, x : x + w]))
    overlap = float(np.mean(occupied[y : y + h, x : x + w]))
    d_min = _min_center_distance(bbox, anchors)
    score = calm + DISPERSION_WEIGHT * d_min / diag - OVERLAP_WEIGHT * overlap
    return score, overlap


def propose_layout(
    saliency: np.ndarray,
    assets: list[SizedAsset],
    fixed: list[BBox] | None = None,
) -> LayoutProposal:
    """Place every asset on the canvas defined by the saliency map."""
    h_canvas, w_canvas = saliency.shape
    fixed = list(fixed or [])
    inv_map = 1.0 - saliency
    diag = math.hypot(w_canvas, h_canvas)

    occupied = np.zeros((h_canvas, w_canvas), dtype=np.float64)
    for fx, fy, fw, fh in fixed:
        occupied[fy : fy + fh, fx : fx + fw] = 1.0

    placements: list[Placement] = []
    anchors = list(fixed)
    for asset in sorted(assets, key=lambda a: (-a.area, a.asset_id)):
        if asset.width > w_canvas or asset.height > h_canvas:
            raise LayoutError(f"asset exceeds canvas: {asset.asset_id!r}")
        ys, xs = candidate_grid(w_canvas, h_canvas, asset.width, asset.height)
        best_free: tuple[float, BBox] | None = None
        best_any: tuple[float, float, BBox] | None = None  # (overlap, score, bbox)
        for y in ys:
            for x in xs:
                bbox = (x, y, asset.width, asset.height)
                score, overlap = placement_score(inv_map, occupied, bbox, anchors, diag)
                if overlap == 0.0:
                    if best_free is None or score > best_free[0]:
                        best_free = (score, bbox)
                if (
                    best_any is None
                    or overlap < best_any[0]
                    or (overlap == best_any[0] and score > best_any[1])
                ):
                    best_any = (overlap, score, bbox)
        assert best_any is not None
        if best_free is not None:
            score, bbox = best_free
            placements.append(Placement(asset.asset_id, bbox, score))
        else:
            _, score, bbox = best_any
            placements.append(Placement(asset.asset_id, bbox, score, degraded=True))
        x, y, w, h = placements[-1].bbox
        occupied[y : y + h, x : x + w] = 1.0
        anchors.append(placements[-1].bbox)

    return LayoutProposal(tuple(placements), sum(p.score for p in placements))
