"""Deterministic SVG projections of leaf samples."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, SamplerError

CANVAS = 800
MARGIN = 60
RADIUS = 1  # 2 px across
# fixed view for 3-D orthographic projections: azimuth 35 deg, elevation 25 deg
_AZ, _EL = np.radians(35.0), np.radians(25.0)
VIEW = np.array([
    [np.cos(_AZ), np.sin(_AZ), 0.0],
    [-np.sin(_AZ) * np.sin(_EL), np.cos(_AZ) * np.sin(_EL), np.cos(_EL)],
])


def coordinate_names(sample):
    b, v = sample.seed_point
    return [f"x{i}" for i in range(len(b))] + [f"v{i}" for i in range(len(v))]


def default_projection(sample):
    names = coordinate_names(sample)
    fiber = [c for c in names if c.startswith("v")]
    return fiber[:2] if len(fiber) >= 2 else names[:2]


def parse_projection(spec, names):
    """``"v0,v1"`` or ``"x0,v0,v1"``: two or three coordinate names."""
    parts = [p.strip() for p in str(spec).split(",") if p.strip()]
    if len(parts) not in (2, 3):
        raise ConfigError(f"projection needs 2 or 3 coordinates, got {spec!r}", "/proj")
    for p in parts:
        if p not in names:
            raise ConfigError(f"unknown coordinate {p!r}; sample has {', '.join(names)}", "/proj")
    if len(set(parts)) != len(parts):
        raise ConfigError("projection repeats a coordinate", "/proj")
    return [names.index(p) for p in parts], parts


def _fmt(x):
    return f"{x:.2f}"


def emit_leaf_plot(sample, projection=None, config_hash="", seed=None) -> str:
    """SVG text of an orthographic projection of ``sample.points``."""
    pts = np.asarray(sample.points, dtype=float)
    if pts.ndim != 2 or len(pts) == 0:
        raise SamplerError("cannot plot an empty leaf sample")
    names = coordinate_names(sample)
    idx, labels = parse_projection(projection or ",".join(default_projection(sample)), names)
    sub = pts[:, idx]
    flat = sub if len(idx) == 2 else sub @ VIEW.T
    lo, hi = flat.min(axis=0), flat.max(axis=0)
    span = float(np.max(hi - lo))
    center = 0.5 * (lo + hi)
    scale = (CANVAS - 2 * MARGIN) / span if span > 0 else 0.0
    xs = CANVAS / 2 + scale * (flat[:, 0] - center[0])
    ys = CANVAS / 2 - scale * (flat[:, 1] - center[1])
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">',
        f"<!-- foliation-lab leaf={sample.kind} config_hash={config_hash} seed={seed} "
        f"points={len(pts)} eps={sample.eps} projection={','.join(labels)} -->",
        f'<rect x="0" y="0" width="{CANVAS}" height="{CANVAS}" fill="white"/>',
        f'<line x1="{MARGIN}" y1="{CANVAS - MARGIN}" x2="{CANVAS - MARGIN}" y2="{CANVAS - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{CANVAS - MARGIN}" x2="{MARGIN}" y2="{MARGIN}" stroke="black"/>',
    ]
    if len(labels) == 2:
        lines.append(f'<text x="{CANVAS // 2}" y="{CANVAS - 20}" text-anchor="middle">{labels[0]}</text>')
        lines.append(f'<text x="20" y="{CANVAS // 2}" text-anchor="middle" '
                     f'transform="rotate(-90 20 {CANVAS // 2})">{labels[1]}</text>')
    else:
        lines.append(f'<text x="{CANVAS // 2}" y="{CANVAS - 20}" text-anchor="middle">'
                     f"orthographic view of ({', '.join(labels)})</text>")
        # projected unit axes from the lower left corner
        for k, name in enumerate(labels):
            dx, dy = 40 * VIEW[0, k], -40 * VIEW[1, k]
            x0, y0 = MARGIN + 50, CANVAS - MARGIN - 50
            lines.append(f'<line x1="{x0}" y1="{y0}" x2="{_fmt(x0 + dx)}" y2="{_fmt(y0 + dy)}" stroke="gray"/>')
            lines.append(f'<text x="{_fmt(x0 + 1.2 * dx)}" y="{_fmt(y0 + 1.2 * dy)}" font-size="12">{name}</text>')
    lines.append('<g fill="black">')
    for x, y in zip(xs, ys):
        lines.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{RADIUS}"/>')
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
