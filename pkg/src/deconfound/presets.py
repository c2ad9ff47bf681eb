"""Ready-made specs mirroring the colored / double-colored / wildlife morpho digit benchmarks."""
from __future__ import annotations

from .causal import Attribute, AttributeSchema, CausalSpec, ConfounderSpec, Edge
from .render import COLOR_NAMES, TEXTURES, RenderParams

PRESETS = ("cm", "dcm", "wlm")


def _digit(d):
    return Attribute("digit", d, "label", tuple(str(i) for i in range(d)))


def _thickness_edge(d):
    # digits below d/2 are thin, the rest thick, always
    return Edge("thickness", tuple(0 if c < d / 2 else 1 for c in range(d)), strength=1.0)


_THICKNESS = Attribute("thickness", 2, "thickness", ("thin", "thick"))


def cm(d: int = 10, p: float = 0.95, seed: int = 0, size: int = 16) -> CausalSpec:
    """Digit color follows the digit with strength ``p``; thickness is tied to the digit."""
    schema = AttributeSchema(
        (_digit(d), Attribute("color", d, "foreground-color", COLOR_NAMES[:d]), _THICKNESS)
    )
    conf = ConfounderSpec(
        "digit", d, (Edge("color", tuple(range(d))), _thickness_edge(d)), strength=p, mode="joint"
    )
    return CausalSpec(schema, (conf,), RenderParams(size=size), seed=seed, label_confounder="digit")


def dcm(d: int = 10, p: float = 0.95, seed: int = 0, size: int = 16) -> CausalSpec:
    """Digit, digit color and background color jointly follow one theme with strength ``p``."""
    schema = AttributeSchema(
        (
            _digit(d),
            Attribute("color", d, "foreground-color", COLOR_NAMES[:d]),
            Attribute("background", d, "background-color", COLOR_NAMES[:d]),
            _THICKNESS,
        )
    )
    # background theme is shifted so that a digit never sits on its own color family
    conf = ConfounderSpec(
        "digit",
        d,
        (Edge("color", tuple(range(d))), Edge("background", tuple((c + 1) % d for c in range(d))), _thickness_edge(d)),
        strength=p,
        mode="joint",
    )
    return CausalSpec(schema, (conf,), RenderParams(size=size), seed=seed, label_confounder="digit")


def wlm(d: int = 10, p: float = 0.95, seed: int = 0, size: int = 16) -> CausalSpec:
    """Digit, digit texture and background texture jointly follow one theme with strength ``p``."""
    t = len(TEXTURES)
    schema = AttributeSchema(
        (
            _digit(d),
            Attribute("texture", t, "foreground-texture", TEXTURES),
            Attribute("background_texture", t, "background-texture", TEXTURES),
            _THICKNESS,
        )
    )
    conf = ConfounderSpec(
        "digit",
        d,
        (
            Edge("texture", tuple(c % t for c in range(d))),
            Edge("background_texture", tuple((c + 2) % t for c in range(d))),
            _thickness_edge(d),
        ),
        strength=p,
        mode="joint",
    )
    params = RenderParams(size=size, default_foreground=(250, 250, 250), default_background=(110, 110, 110))
    return CausalSpec(schema, (conf,), params, seed=seed, label_confounder="digit")


def preset(name: str, d: int = 10, p: float = 0.95, seed: int = 0, size: int = 16) -> CausalSpec:
    try:
        factory = {"cm": cm, "dcm": dcm, "wlm": wlm}[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESETS}") from None
    return factory(d=d, p=p, seed=seed, size=size)
