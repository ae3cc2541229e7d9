"""Flattening of stroke paths into polylines.

Quadratic segments subdivide recursively until the chord deviates from the
true curve by at most the tolerance. For a quadratic with control point c
over endpoints p0, p1 the deviation from the chord is 2t(1-t) * |c - mid|,
maximal at t = 1/2, so the flatness test |c - (p0+p1)/2| / 2 <= tolerance
is exact, not a heuristic.
"""

from __future__ import annotations

from ..document.types import PATH_ARITY, PathCommand

DEFAULT_TOLERANCE = 0.25


class MalformedPath(Exception):
    pass


def _as_command(cmd) -> tuple:
    if isinstance(cmd, PathCommand):
        kind, coords = cmd.kind, cmd.coords
    elif isinstance(cmd, (list, tuple)) and cmd:
        kind, coords = cmd[0], tuple(cmd[1:])
    else:
        raise MalformedPath(f"not a path command: {cmd!r}")
    arity = PATH_ARITY.get(kind)
    if arity is None:
        raise MalformedPath(f"unknown command kind {kind!r}")
    if len(coords) != arity:
        raise MalformedPath(f"{kind} takes {arity} coordinates, got {len(coords)}")
    return kind, coords


def _flatten_quad(p0, control, p1, tol_sq, out):
    dx = control[0] - 0.5 * (p0[0] + p1[0])
    dy = control[1] - 0.5 * (p0[1] + p1[1])
    if 0.25 * (dx * dx + dy * dy) <= tol_sq:
        out.append(p1)
        return
    left_c = (0.5 * (p0[0] + control[0]), 0.5 * (p0[1] + control[1]))
    right_c = (0.5 * (control[0] + p1[0]), 0.5 * (control[1] + p1[1]))
    mid = (0.5 * (left_c[0] + right_c[0]), 0.5 * (left_c[1] + right_c[1]))
    _flatten_quad(p0, left_c, mid, tol_sq, out)
    _flatten_quad(mid, right_c, p1, tol_sq, out)


def flatten_path(path, tolerance: float = DEFAULT_TOLERANCE) -> list[tuple[float, float]]:
    """Subdivide a command list into polyline points.

    The path must begin with a single move-to; the result always has at
    least one point.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    if not path:
        raise MalformedPath("empty path")
    points: list[tuple[float, float]] = []
    tol_sq = tolerance * tolerance
    for i, raw in enumerate(path):
        kind, coords = _as_command(raw)
        if i == 0:
            if kind != "M":
                raise MalformedPath("path must begin with a move-to")
            points.append((coords[0], coords[1]))
            continue
        if kind == "M":
            raise MalformedPath("move-to is only valid as the first command")
        if kind == "L":
            points.append((coords[0], coords[1]))
        else:  # Q
            control = (coords[0], coords[1])
            end = (coords[2], coords[3])
            _flatten_quad(points[-1], control, end, tol_sq, points)
    return points
