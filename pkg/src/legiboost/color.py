"""Exact color mathematics: luminance, contrast, color-space conversion,
perceptual distance, opposite-color search, and color naming.

All colors are unit-interval sRGB triples unless a function says otherwise.
Lab uses the D65 white point with the 2-degree standard observer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from typing import NamedTuple


class ColorRGB(NamedTuple):
    """sRGB color with channels in [0, 1]."""

    r: float
    g: float
    b: float

    def validate(self) -> "ColorRGB":
        for name, v in zip("rgb", self):
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"channel {name}={v} outside [0, 1]")
        return self


class ColorLab(NamedTuple):
    """CIELAB color: l in [0, 100], a and b signed chroma axes."""

    l: float
    a: float
    b: float


class ColorHSV(NamedTuple):
    """HSV color: h in degrees [0, 360), s and v in [0, 1]."""

    h: float
    s: float
    v: float


WHITE = ColorRGB(1.0, 1.0, 1.0)
BLACK = ColorRGB(0.0, 0.0, 0.0)

# sRGB <-> XYZ (D65), IEC 61966-2-1 matrices.
_M_RGB_TO_XYZ = (
    (0.4124564, 0.3575761, 0.1804375),
    (0.2126729, 0.7151522, 0.0721750),
    (0.0193339, 0.1191920, 0.9503041),
)
_M_XYZ_TO_RGB = (
    (3.2404542, -1.5371385, -0.4985314),
    (-0.9692660, 1.8760108, 0.0415560),
    (0.0556434, -0.2040259, 1.0572252),
)
_WHITE_XYZ = (0.95047, 1.0, 1.08883)
_DELTA = 6.0 / 29.0


def srgb_to_linear(c: float) -> float:
    """Linearize one sRGB channel value."""
    return c / 12.92 if c <= 0.04045 else ((c + 0.055) / 1.055) ** 2.4


def linear_to_srgb(c: float) -> float:
    """Companding inverse of :func:`srgb_to_linear`."""
    return 12.92 * c if c <= 0.0031308 else 1.055 * c ** (1.0 / 2.4) - 0.055


def relative_luminance(c: ColorRGB) -> float:
    """WCAG relative luminance of an sRGB color, in [0, 1].

    0 for black, 1 for white, monotone in each channel.
    """
    rl = srgb_to_linear(c.r)
    gl = srgb_to_linear(c.g)
    bl = srgb_to_linear(c.b)
    return 0.2126 * rl + 0.7152 * gl + 0.0722 * bl


def contrast_ratio(a: ColorRGB, b: ColorRGB) -> float:
    """WCAG contrast ratio (L_hi + 0.05) / (L_lo + 0.05), in [1, 21]."""
    la = relative_luminance(a)
    lb = relative_luminance(b)
    hi, lo = (la, lb) if la >= lb else (lb, la)
    return (hi + 0.05) / (lo + 0.05)


def _lab_f(t: float) -> float:
    if t > _DELTA**3:
        return t ** (1.0 / 3.0)
    return t / (3.0 * _DELTA**2) + 4.0 / 29.0


def _lab_f_inv(ft: float) -> float:
    if ft > _DELTA:
        return ft**3
    return 3.0 * _DELTA**2 * (ft - 4.0 / 29.0)


def rgb_to_lab(c: ColorRGB) -> ColorLab:
    """Convert sRGB to CIELAB (D65, 2-degree observer)."""
    lin = (srgb_to_linear(c.r), srgb_to_linear(c.g), srgb_to_linear(c.b))
    xyz = [sum(m * v for m, v in zip(row, lin)) for row in _M_RGB_TO_XYZ]
    fx = _lab_f(xyz[0] / _WHITE_XYZ[0])
    fy = _lab_f(xyz[1] / _WHITE_XYZ[1])
    fz = _lab_f(xyz[2] / _WHITE_XYZ[2])
    return ColorLab(116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))


def lab_to_rgb(lab: ColorLab) -> ColorRGB:
    """Convert CIELAB back to sRGB; out-of-gamut results are clamped."""
    fy = (lab.l + 16.0) / 116.0
    fx = fy + lab.a / 500.0
    fz = fy - lab.b / 200.0
    xyz = (
        _lab_f_inv(fx) * _WHITE_XYZ[0],
        _lab_f_inv(fy) * _WHITE_XYZ[1],
        _lab_f_inv(fz) * _WHITE_XYZ[2],
    )
    chans = []
    for row in _M_XYZ_TO_RGB:
        lin = sum(m * v for m, v in zip(row, xyz))
        chans.append(min(1.0, max(0.0, linear_to_srgb(min(1.0, max(0.0, lin))))))
    return ColorRGB(*chans)


def rgb_to_hsv(c: ColorRGB) -> ColorHSV:
    """Convert sRGB to HSV with hue in degrees [0, 360)."""
    mx = max(c)
    mn = min(c)
    d = mx - mn
    if d == 0.0:
        h = 0.0
    elif mx == c.r:
        h = (60.0 * ((c.g - c.b) / d)) % 360.0
    elif mx == c.g:
        h = (60.0 * ((c.b - c.r) / d) + 120.0) % 360.0
    else:
        h = (60.0 * ((c.r - c.g) / d) + 240.0) % 360.0
    s = 0.0 if mx == 0.0 else d / mx
    return ColorHSV(h, s, mx)


def hsv_to_rgb(c: ColorHSV) -> ColorRGB:
    """Inverse of :func:`rgb_to_hsv`."""
    h = (c.h % 360.0) / 60.0
    i = int(h) % 6
    f = h - int(h)
    p = c.v * (1.0 - c.s)
    q = c.v * (1.0 - c.s * f)
    t = c.v * (1.0 - c.s * (1.0 - f))
    v = c.v
    r, g, b = (
        (v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q),
    )[i]
    return ColorRGB(r, g, b)


def delta_e_2000_lab(lab1: ColorLab, lab2: ColorLab) -> float:
    """CIEDE2000 color difference between two Lab colors.

    Follows the standard formulation including the hue-rotation term;
    symmetric, and 0 iff the Lab coordinates are identical.
    """
    l1, a1, b1 = lab1
    l2, a2, b2 = lab2

    c1 = math.hypot(a1, b1)
    c2 = math.hypot(a2, b2)
    c_bar = (c1 + c2) / 2.0
    g = 0.5 * (1.0 - math.sqrt(c_bar**7 / (c_bar**7 + 25.0**7)))
    a1p = (1.0 + g) * a1
    a2p = (1.0 + g) * a2
    c1p = math.hypot(a1p, b1)
    c2p = math.hypot(a2p, b2)

    h1p = 0.0 if (a1p == 0.0 and b1 == 0.0) else math.degrees(math.atan2(b1, a1p)) % 360.0
    h2p = 0.0 if (a2p == 0.0 and b2 == 0.0) else math.degrees(math.atan2(b2, a2p)) % 360.0

    dlp = l2 - l1
    dcp = c2p - c1p
    if c1p * c2p == 0.0:
        dhp = 0.0
    else:
        dhp = h2p - h1p
        if dhp > 180.0:
            dhp -= 360.0
        elif dhp < -180.0:
            dhp += 360.0
    d_hp = 2.0 * math.sqrt(c1p * c2p) * math.sin(math.radians(dhp) / 2.0)

    l_bar = (l1 + l2) / 2.0
    cp_bar = (c1p + c2p) / 2.0
    if c1p * c2p == 0.0:
        hp_bar = h1p + h2p
    elif abs(h1p - h2p) <= 180.0:
        hp_bar = (h1p + h2p) / 2.0
    elif h1p + h2p < 360.0:
        hp_bar = (h1p + h2p + 360.0) / 2.0
    else:
        hp_bar = (h1p + h2p - 360.0) / 2.0

    t = (
        1.0
        - 0.17 * math.cos(math.radians(hp_bar - 30.0))
        + 0.24 * math.cos(math.radians(2.0 * hp_bar))
        + 0.32 * math.cos(math.radians(3.0 * hp_bar + 6.0))
        - 0.20 * math.cos(math.radians(4.0 * hp_bar - 63.0))
    )
    s_l = 1.0 + 0.015 * (l_bar - 50.0) ** 2 / math.sqrt(20.0 + (l_bar - 50.0) ** 2)
    s_c = 1.0 + 0.045 * cp_bar
    s_h = 1.0 + 0.015 * cp_bar * t
    d_theta = 30.0 * math.exp(-(((hp_bar - 275.0) / 25.0) ** 2))
    r_c = 2.0 * math.sqrt(cp_bar**7 / (cp_bar**7 + 25.0**7))
    r_t = -math.sin(math.radians(2.0 * d_theta)) * r_c

    tl = dlp / s_l
    tc = dcp / s_c
    th = d_hp / s_h
    return math.sqrt(tl * tl + tc * tc + th * th + r_t * tc * th)


def delta_e_2000(a: ColorRGB, b: ColorRGB) -> float:
    """CIEDE2000 distance between two sRGB colors (via CIELAB)."""
    return delta_e_2000_lab(rgb_to_lab(a), rgb_to_lab(b))


_COARSE_STEPS = 9  # 9^3 lattice scan to anchor the octant descent


def _octant_descent(c: ColorRGB, lo: list[float], hi: list[float],
                    iterations: int = 8) -> tuple[float, tuple[float, float, float]]:
    """Binary search per axis: score the 8 box corners and recurse into
    the octant anchored at the best corner. Ties between equally-scored
    corners keep the lexicographically lowest (r, g, b) corner."""
    best_corner: tuple[float, float, float] | None = None
    best_d = -1.0
    for _ in range(iterations):
        iter_corner = None
        iter_d = -1.0
        for rr in (lo[0], hi[0]):
            for gg in (lo[1], hi[1]):
                for bb in (lo[2], hi[2]):
                    d = delta_e_2000(c, ColorRGB(rr, gg, bb))
                    if d > iter_d:
                        iter_d = d
                        iter_corner = (rr, gg, bb)
        assert iter_corner is not None
        if iter_d > best_d:
            best_d = iter_d
            best_corner = iter_corner
        for ax in range(3):
            mid = (lo[ax] + hi[ax]) / 2.0
            if iter_corner[ax] == lo[ax]:
                hi[ax] = mid
            else:
                lo[ax] = mid
    assert best_corner is not None
    return best_d, best_corner


def opposite_color(c: ColorRGB) -> ColorRGB:
    """Color maximizing CIEDE2000 distance to ``c``.

    A deterministic 9x9x9 lattice scan picks the most distant coarse
    point (ties keep the lexicographically lowest), then an octant
    binary search refines within the surrounding box, halving the box
    side 8 times. A pure corner descent from the unit cube can be
    trapped in the wrong octant for saturated inputs; the coarse anchor
    keeps the result within 5% of the brute-force optimum.
    """
    step = 1.0 / (_COARSE_STEPS - 1)
    scored = []
    for i in range(_COARSE_STEPS):
        for j in range(_COARSE_STEPS):
            for k in range(_COARSE_STEPS):
                p = (i * step, j * step, k * step)
                scored.append((delta_e_2000(c, ColorRGB(*p)), p))
    scored.sort(key=lambda sp: (-sp[0], sp[1]))
    best_d, best_p = scored[0]
    for anchor_d, anchor in scored[:4]:
        lo = [max(0.0, v - step) for v in anchor]
        hi = [min(1.0, v + step) for v in anchor]
        refined_d, refined = _octant_descent(c, lo, hi)
        if refined_d > best_d:
            best_d, best_p = refined_d, refined
    return ColorRGB(*best_p)


@dataclass(frozen=True)
class ColorLexicon:
    """Named color table; names unique case-insensitively, non-empty."""

    entries: tuple[tuple[str, ColorRGB], ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("lexicon must be non-empty")
        seen = set()
        for name, _ in self.entries:
            key = name.casefold()
            if key in seen:
                raise ValueError(f"duplicate lexicon name: {name!r}")
            seen.add(key)

    def names(self) -> list[str]:
        return [name for name, _ in self.entries]


def parse_hex_color(text: str) -> ColorRGB:
    """Parse ``#RRGGBB`` into a unit-interval color."""
    t = text.strip().lstrip("#")
    if len(t) != 6:
        raise ValueError(f"expected #RRGGBB, got {text!r}")
    return ColorRGB(*(int(t[i : i + 2], 16) / 255.0 for i in (0, 2, 4)))


def load_lexicon_file(path: str) -> ColorLexicon:
    """Load a lexicon from ``name,#RRGGBB`` lines; ``#`` starts a comment."""
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            name, _, hexpart = line.partition(",")
            entries.append((name.strip(), parse_hex_color(hexpart)))
    return ColorLexicon(tuple(entries))


def default_lexicon() -> ColorLexicon:
    """The bundled 148-name CSS extended color lexicon."""
    data = resources.files("legiboost.data").joinpath("css_colors.txt").read_text("utf-8")
    entries = []
    for line in data.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, _, hexpart = line.partition(",")
        entries.append((name.strip(), parse_hex_color(hexpart)))
    return ColorLexicon(tuple(entries))


def nearest_color_name(c: ColorRGB, lex: ColorLexicon) -> str:
    """Lexicon name minimizing CIEDE2000 distance to ``c``.

    Ties are broken alphabetically.
    """
    target = rgb_to_lab(c)
    ranked = sorted(
        ((delta_e_2000_lab(target, rgb_to_lab(col)), name) for name, col in lex.entries),
        key=lambda p: (p[0], p[1]),
    )
    return ranked[0][1]


def mean_color(pixels) -> ColorRGB:
    """Mean of an (N, 3) array (or iterable) of RGB triples."""
    import numpy as np

    arr = np.asarray(pixels, dtype=np.float64).reshape(-1, 3)
    if arr.shape[0] == 0:
        raise ValueError("mean_color of empty pixel set")
    m = arr.mean(axis=0)
    return ColorRGB(float(m[0]), float(m[1]), float(m[2]))
