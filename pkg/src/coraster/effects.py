"""Declared per-effect parameter tables for the layer filter pipeline.

Every effect has exactly one tunable parameter. The table is the single
authority for parameter names, ranges, defaults, and identity values; the
protocol validator, the document reducer, and the renderer all consult it.
An effect applied at its identity value is a pixel-exact no-op.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class ParamSpec:
    name: str
    lo: float
    hi: float
    default: float
    identity: float
    integer: bool = False


@dataclass(frozen=True)
class FilterSpec:
    effect: str
    param: ParamSpec


FILTER_SPECS: dict[str, FilterSpec] = {
    "contrast": FilterSpec("contrast", ParamSpec("k", 0.0, 4.0, 1.0, 1.0)),
    "pixelation": FilterSpec("pixelation", ParamSpec("b", 1, 64, 8, 1, integer=True)),
    "vignette": FilterSpec("vignette", ParamSpec("s", 0.0, 1.0, 0.5, 0.0)),
    "chromaticAberration": FilterSpec(
        "chromaticAberration", ParamSpec("o", 0.0, 0.02, 0.005, 0.0)
    ),
    "chromaZoom": FilterSpec("chromaZoom", ParamSpec("z", 0.0, 0.1, 0.02, 0.0)),
}

EFFECT_NAMES = tuple(FILTER_SPECS)

# Union of every declared parameter name, for wire-level checks where the
# target effect is not yet known.
KNOWN_PARAM_NAMES = frozenset(spec.param.name for spec in FILTER_SPECS.values())


def validate_params(effect: str, params: dict) -> dict:
    """Check a parameter map against the effect's declared spec.

    Returns a fully-populated map (missing parameters take defaults).
    Raises ValueError naming the offending parameter otherwise.
    """
    spec = FILTER_SPECS.get(effect)
    if spec is None:
        raise ValueError(f"unknown effect {effect!r}")
    for name in params:
        if name != spec.param.name:
            raise ValueError(f"params.{name}")
    p = spec.param
    value = params.get(p.name, p.default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"params.{p.name}")
    if p.integer:
        if float(value) != int(value):
            raise ValueError(f"params.{p.name}")
        value = int(value)
    if not (p.lo <= value <= p.hi):
        raise ValueError(f"params.{p.name}")
    return {p.name: value}
