"""Procedural glyph renderer: the concrete mechanism turning attributes + noise into pixels.

Everything here is integer arithmetic on lookup tables, so a given
``(assignment, noise, params)`` always produces the same bytes.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# 5x7 dot-matrix digits
_DIGITS = {
    0: ("01110", "10001", "10011", "10101", "11001", "10001", "01110"),
    1: ("00100", "01100", "00100", "00100", "00100", "00100", "01110"),
    2: ("01110", "10001", "00001", "00010", "00100", "01000", "11111"),
    3: ("11111", "00010", "00100", "00010", "00001", "10001", "01110"),
    4: ("00010", "00110", "01010", "10010", "11111", "00010", "00010"),
    5: ("11111", "10000", "11110", "00001", "00001", "10001", "01110"),
    6: ("00110", "01000", "10000", "11110", "10001", "10001", "01110"),
    7: ("11111", "00001", "00010", "00100", "01000", "01000", "01000"),
    8: ("01110", "10001", "10001", "01110", "10001", "10001", "01110"),
    9: ("01110", "10001", "10001", "01111", "00001", "00010", "01100"),
}
GLYPHS = np.array(
    [[[c == "1" for c in row] for row in _DIGITS[d]] for d in range(10)], dtype=bool
)

PALETTE = (
    (230, 25, 75),  # red
    (60, 180, 75),  # green
    (255, 225, 25),  # yellow
    (0, 130, 200),  # blue
    (245, 130, 48),  # orange
    (145, 30, 180),  # purple
    (70, 240, 240),  # cyan
    (240, 50, 230),  # magenta
    (210, 245, 60),  # lime
    (250, 190, 212),  # pink
)
COLOR_NAMES = ("red", "green", "yellow", "blue", "orange", "purple", "cyan", "magenta", "lime", "pink")
TEXTURES = ("solid", "hstripes", "vstripes", "checker", "diagonal")
# Shade levels out of 256 for (on, off) pattern cells; each texture has its own
# "on" level so the texture stays identifiable even where a glyph has no "off" cells.
_SHADE = np.array([[256, 256], [240, 112], [224, 104], [208, 96], [192, 88]], dtype=np.uint16)


@dataclass(frozen=True)
class RenderParams:
    size: int = 16
    palette: tuple[tuple[int, int, int], ...] = PALETTE
    background_palette: tuple[tuple[int, int, int], ...] | None = None
    default_foreground: tuple[int, int, int] = (255, 255, 255)
    default_background: tuple[int, int, int] = (0, 0, 0)
    texture_period: int = 4
    thickness_radii: tuple[int, ...] = (0, 1)
    jitter: int = 2

    def __post_init__(self):
        object.__setattr__(self, "palette", tuple(tuple(int(v) for v in c) for c in self.palette))
        if self.background_palette is None:
            bg = tuple(tuple(int(v) * 3 // 8 for v in c) for c in self.palette)
            object.__setattr__(self, "background_palette", bg)
        else:
            object.__setattr__(
                self, "background_palette", tuple(tuple(int(v) for v in c) for c in self.background_palette)
            )
        object.__setattr__(self, "thickness_radii", tuple(int(r) for r in self.thickness_radii))
        object.__setattr__(self, "default_foreground", tuple(self.default_foreground))
        object.__setattr__(self, "default_background", tuple(self.default_background))

    @property
    def glyph_scale(self) -> int:
        return max(1, (self.size - 2 * self.jitter - 2 * max(self.thickness_radii)) // GLYPHS.shape[1])

    def violations(self, schema) -> list[str]:
        errs = []
        for a in schema.attributes:
            if a.role == "foreground-color" and a.cardinality > len(self.palette):
                errs.append(f"palette has {len(self.palette)} colors; {a.name!r} needs {a.cardinality}")
            if a.role == "background-color" and a.cardinality > len(self.background_palette):
                errs.append(f"background palette too short for {a.name!r}")
            if a.role == "label" and a.cardinality > len(GLYPHS):
                errs.append(f"glyph bank covers {len(GLYPHS)} labels; {a.name!r} needs {a.cardinality}")
            if a.role in ("texture", "foreground-texture", "background-texture") and a.cardinality > len(TEXTURES):
                errs.append(f"texture bank has {len(TEXTURES)} patterns; {a.name!r} needs {a.cardinality}")
            if a.role == "thickness" and a.cardinality != len(self.thickness_radii):
                errs.append(f"thickness {a.name!r} has {a.cardinality} values but {len(self.thickness_radii)} radii")
        h = GLYPHS.shape[1] * self.glyph_scale + 2 * max(self.thickness_radii) + 2 * self.jitter
        if h > self.size:
            errs.append(f"image side {self.size} too small for glyph + jitter")
        if self.texture_period < 2:
            errs.append("texture period must be >= 2")
        return errs

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "palette": [list(c) for c in self.palette],
            "background_palette": [list(c) for c in self.background_palette],
            "default_foreground": list(self.default_foreground),
            "default_background": list(self.default_background),
            "texture_period": self.texture_period,
            "thickness_radii": list(self.thickness_radii),
            "jitter": self.jitter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RenderParams":
        return cls(
            size=int(d["size"]),
            palette=tuple(tuple(c) for c in d["palette"]),
            background_palette=tuple(tuple(c) for c in d["background_palette"]),
            default_foreground=tuple(d["default_foreground"]),
            default_background=tuple(d["default_background"]),
            texture_period=int(d["texture_period"]),
            thickness_radii=tuple(d["thickness_radii"]),
            jitter=int(d["jitter"]),
        )


@dataclass(frozen=True)
class RenderNoise:
    """Exogenous noise of one sample; recorded so that abduction is a lookup."""

    dx: int = 0
    dy: int = 0
    phase: int = 0
    draw_seed: int = 0

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.dx, self.dy, self.phase, self.draw_seed)


def _dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    out = mask.copy()
    h, w = mask.shape
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dx * dx + dy * dy > radius * radius:
                continue
            shifted = np.zeros_like(mask)
            shifted[max(dy, 0) : h + min(dy, 0), max(dx, 0) : w + min(dx, 0)] = mask[
                max(-dy, 0) : h - max(dy, 0), max(-dx, 0) : w - max(dx, 0)
            ]
            out |= shifted
    return out


@lru_cache(maxsize=16)
def mask_bank(params: RenderParams) -> np.ndarray:
    """Glyph masks indexed ``[label, thickness, dy + jitter, dx + jitter, row, col]``."""
    h, s, j = params.size, params.glyph_scale, params.jitter
    glyphs = np.kron(GLYPHS, np.ones((s, s), dtype=bool)).astype(bool)
    gh, gw = glyphs.shape[1:]
    top, left = (h - gh) // 2, (h - gw) // 2
    n_shift = 2 * j + 1
    bank = np.zeros((len(GLYPHS), len(params.thickness_radii), n_shift, n_shift, h, h), dtype=bool)
    for g in range(len(GLYPHS)):
        base = np.zeros((h, h), dtype=bool)
        base[top : top + gh, left : left + gw] = glyphs[g]
        for t, r in enumerate(params.thickness_radii):
            m = _dilate(base, r)
            for iy, dy in enumerate(range(-j, j + 1)):
                for ix, dx in enumerate(range(-j, j + 1)):
                    bank[g, t, iy, ix] = np.roll(m, (dy, dx), axis=(0, 1))
    return bank


@lru_cache(maxsize=16)
def texture_bank(params: RenderParams) -> np.ndarray:
    """Binary patterns indexed ``[texture, phase, row, col]``."""
    h, per = params.size, params.texture_period
    half = per // 2
    rows, cols = np.mgrid[0:h, 0:h]
    bank = np.zeros((len(TEXTURES), per, h, h), dtype=np.uint8)
    for ph in range(per):
        bank[0, ph] = 1
        bank[1, ph] = ((rows + ph) % per) < half
        bank[2, ph] = ((cols + ph) % per) < half
        bank[3, ph] = (((rows + ph) % per < half) ^ ((cols + ph) % per < half)).astype(np.uint8)
        bank[4, ph] = ((rows + cols + ph) % per) < half
    return bank


def render_batch(schema, attrs: np.ndarray, noise: np.ndarray, params: RenderParams) -> np.ndarray:
    """Render ``(N, A)`` attribute codes with ``(N, 4)`` noise rows into ``(N, H, H, 3)`` uint8 images."""
    attrs = np.asarray(attrs, dtype=np.int64).reshape(-1, len(schema.attributes))
    noise = np.asarray(noise, dtype=np.int64).reshape(-1, 4)
    n, j = attrs.shape[0], params.jitter

    def col(role, default=0):
        a = schema.by_role(role)
        return attrs[:, schema.index(a.name)] if a is not None else np.full(n, default, dtype=np.int64)

    label = col("label")
    thick = col("thickness")
    dx, dy, phase = noise[:, 0], noise[:, 1], noise[:, 2] % params.texture_period
    mask = mask_bank(params)[label, thick, dy + j, dx + j]

    palette = np.array(params.palette, dtype=np.uint16)
    bg_palette = np.array(params.background_palette, dtype=np.uint16)
    if schema.by_role("foreground-color") is not None:
        fg = palette[col("foreground-color")]
    else:
        fg = np.tile(np.array(params.default_foreground, dtype=np.uint16), (n, 1))
    if schema.by_role("background-color") is not None:
        bg = bg_palette[col("background-color")]
    else:
        bg = np.tile(np.array(params.default_background, dtype=np.uint16), (n, 1))

    fg_role = "foreground-texture" if schema.by_role("foreground-texture") is not None else "texture"
    tex = texture_bank(params)
    fg_tex, bg_tex = col(fg_role), col("background-texture")
    fg_shade = _SHADE[fg_tex[:, None, None], 1 - tex[fg_tex, phase]]
    bg_shade = _SHADE[bg_tex[:, None, None], 1 - tex[bg_tex, phase]]
    fg_pix = (fg[:, None, None, :] * fg_shade[..., None]) >> 8
    bg_pix = (bg[:, None, None, :] * bg_shade[..., None]) >> 8
    img = np.where(mask[..., None], fg_pix, bg_pix)
    return img.astype(np.uint8)


def render(schema, assignment: dict, noise: RenderNoise, params: RenderParams) -> np.ndarray:
    """Render a single ``(H, H, 3)`` image from an attribute assignment and its noise."""
    row = np.array([[assignment[a.name] for a in schema.attributes]])
    return render_batch(schema, row, np.array([noise.as_tuple()]), params)[0]


def foreground_mask(schema, attrs: np.ndarray, noise: np.ndarray, params: RenderParams) -> np.ndarray:
    """Boolean ``(N, H, H)`` glyph region for each row, as used by :func:`render_batch`."""
    attrs = np.asarray(attrs).reshape(-1, len(schema.attributes))
    noise = np.asarray(noise).reshape(-1, 4)
    lab = schema.by_role("label")
    th = schema.by_role("thickness")
    label = attrs[:, schema.index(lab.name)]
    thick = attrs[:, schema.index(th.name)] if th is not None else np.zeros(len(attrs), dtype=np.int64)
    j = params.jitter
    return mask_bank(params)[label, thick, noise[:, 1] + j, noise[:, 0] + j]
