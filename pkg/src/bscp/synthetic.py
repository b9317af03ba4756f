"""Synthetic mask generators: bent constant-width ribbons, linear wedges,
four-lobe stars and notched ellipses, with seeded control-point jitter."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import DatasetError
from .mask import save_mask_png

CANVAS = 200

FOUR_CLASS = ("ribbon", "wedge", "star", "notched_ellipse")
THICKNESS_PAIR = ("ribbon_constant", "ribbon_tapered")
VARIANTS = {"four-class": FOUR_CLASS, "thickness-pair": THICKNESS_PAIR}


def _jitter(rng: np.random.Generator, value: float, rel: float = 0.10) -> float:
    return value * (1.0 + rng.uniform(-rel, rel))


def _grid(size: int = CANVAS):
    ax = np.arange(size)
    gx, gy = np.meshgrid(ax, ax)
    return gx, gy


def _bezier(p0, p1, p2, n: int = 400) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n)[:, None]
    return (1 - t) ** 2 * p0 + 2 * (1 - t) * t * p1 + t ** 2 * p2


def _tube(centerline: np.ndarray, widths: np.ndarray, size: int = CANVAS) -> np.ndarray:
    """Foreground = points within the local half-width of the centerline."""
    gx, gy = _grid(size)
    pts = np.column_stack([gx.ravel(), gy.ravel()]).astype(np.float64)
    dist, idx = cKDTree(centerline).query(pts, k=1)
    return (dist <= widths[idx]).reshape(size, size)


def bent_ribbon(rng: np.random.Generator, tapered: bool = False) -> np.ndarray:
    """Constant-width (or gently tapered) band along a bent centerline.

    The taper slope is kept near one degree: far below the orientation bin
    width of the descriptor, so the two ribbon variants share their contour
    silhouette statistics and differ essentially only in thickness profile.
    """
    c = CANVAS / 2
    span = rng.uniform(58.0, 82.0)
    sag = rng.uniform(24.0, 62.0)
    p0 = np.array([c - span, c + sag * 0.4])
    p2 = np.array([c + span, c + sag * 0.4])
    p1 = np.array([c + rng.uniform(-20, 20), c - sag])
    line = _bezier(p0, p1, p2)
    if tapered:
        w0, w1 = _jitter(rng, 7.9, 0.05), _jitter(rng, 11.4, 0.05)
        widths = np.linspace(w0, w1, len(line))
    else:
        widths = np.full(len(line), _jitter(rng, 9.6, 0.08))
    return _tube(line, widths)


def linear_wedge(rng: np.random.Generator) -> np.ndarray:
    """Band whose width grows linearly along a slightly sagged axis. The width
    ramp and the sag keep both pose-disambiguation skews decisively nonzero."""
    c = CANVAS / 2
    half = _jitter(rng, 75.0)
    sag = _jitter(rng, 18.0)
    p0 = np.array([c - half, c])
    p2 = np.array([c + half, c])
    p1 = np.array([c + rng.uniform(-6, 6), c - sag])
    line = _bezier(p0, p1, p2)
    w0, w1 = _jitter(rng, 4.0), _jitter(rng, 20.0)
    widths = np.linspace(w0, w1, len(line))
    return _tube(line, widths)


def four_lobe_star(rng: np.random.Generator) -> np.ndarray:
    """Polar blob with a four-fold lobe modulation."""
    gx, gy = _grid()
    c = CANVAS / 2
    phi0 = rng.uniform(0, 2 * np.pi)
    base = _jitter(rng, 55.0)
    depth = rng.uniform(0.28, 0.38)
    stretch = _jitter(rng, 1.25)
    x = (gx - c) / stretch
    y = gy - c
    r = np.hypot(x, y)
    phi = np.arctan2(y, x)
    return r <= base * (1 + depth * np.cos(4 * phi + phi0))


def notched_ellipse(rng: np.random.Generator) -> np.ndarray:
    """Ellipse with a circular bite taken out of the rim."""
    gx, gy = _grid()
    c = CANVAS / 2
    a = _jitter(rng, 75.0)
    b = _jitter(rng, 42.0)
    ell = ((gx - c) / a) ** 2 + ((gy - c) / b) ** 2 <= 1.0
    # bite clearly off both symmetry axes so the pose skews stay decisive
    ang = rng.uniform(0.35, 1.1) * rng.choice([-1.0, 1.0])
    bx = c + a * np.cos(ang) * 0.95
    by = c + b * np.sin(ang) * 0.95
    rb = _jitter(rng, 22.0)
    bite = (gx - bx) ** 2 + (gy - by) ** 2 <= rb ** 2
    return ell & ~bite


def zigzag_ribbon(rng: np.random.Generator, n_kinks: int = 4, size: int = 512) -> np.ndarray:
    """Constant-width band along a zigzag centerline, tapering to sharp points
    at both ends.

    The kink corners and the two tips give the contour exactly ten strong,
    well-separated curvature anchors (matching the default critical-point
    count) and the skeleton is a single branchless path, which makes the whole
    pipeline stable under rotation and rescaling; used by the geometric
    invariance checks. Drawn large and wide so pixel-level noise stays small
    relative to the geometry.
    """
    c = size / 2
    u = size / 256.0
    n_seg = n_kinks + 1
    xs = np.linspace(c - _jitter(rng, 105.0 * u), c + _jitter(rng, 105.0 * u), n_seg + 1)
    amp = np.array([_jitter(rng, 34.0 * u) for _ in range(n_seg + 1)])
    ys = c + amp * np.where(np.arange(n_seg + 1) % 2 == 0, -1.0, 1.0)
    ys = ys + np.linspace(0.0, _jitter(rng, 18.0 * u), n_seg + 1)  # bias: decisive y-skew
    ctrl = np.column_stack([xs, ys])
    seg_pts = []
    for i in range(n_seg):
        t = np.linspace(0.0, 1.0, 160, endpoint=(i == n_seg - 1))[:, None]
        seg_pts.append(ctrl[i] * (1 - t) + ctrl[i + 1] * t)
    line = np.vstack(seg_pts)
    t = np.linspace(0.0, 1.0, len(line))
    w = _jitter(rng, 15.0 * u)
    ramp_a, ramp_b = 0.10, 0.22  # unequal tapers keep the x-skew decisive
    widths = w * np.minimum(1.0, np.minimum(t / ramp_a, (1.0 - t) / ramp_b))
    widths = np.maximum(widths, 6.0 * u)  # blunt tips: thickness noise stays relative-small
    return _tube(line, widths, size=size)


def polygon_blob(rng: np.random.Generator, n_corners: int = 10) -> np.ndarray:
    """Irregular star-convex polygon with pronounced, well-separated corners.

    Every corner is a strong curvature maximum, which pins the contour
    evolution critical points; the radius jitter keeps the pose skews
    decisively nonzero.
    """
    c = CANVAS / 2
    ang = 2 * np.pi * np.arange(n_corners) / n_corners
    ang = ang + rng.uniform(-0.35, 0.35, n_corners) / n_corners * 2 * np.pi
    radii = 80.0 * (1.0 + rng.uniform(-0.35, 0.35, n_corners))
    vx = c + radii * np.cos(ang) * _jitter(rng, 1.1)
    vy = c + radii * np.sin(ang) * 0.75
    gx, gy = _grid()
    inside = np.zeros((CANVAS, CANVAS), dtype=bool)
    # even-odd fill against the closed polygon
    px = np.append(vx, vx[0])
    py = np.append(vy, vy[0])
    for i in range(n_corners):
        x0, y0, x1, y1 = px[i], py[i], px[i + 1], py[i + 1]
        if y0 == y1:
            continue
        cond = (gy >= min(y0, y1)) & (gy < max(y0, y1))
        xi = x0 + (gy - y0) * (x1 - x0) / (y1 - y0)
        inside ^= cond & (gx < xi)
    return inside


_GENERATORS = {
    "ribbon": lambda rng: bent_ribbon(rng, tapered=False),
    "wedge": linear_wedge,
    "star": four_lobe_star,
    "notched_ellipse": notched_ellipse,
    "ribbon_constant": lambda rng: bent_ribbon(rng, tapered=False),
    "ribbon_tapered": lambda rng: bent_ribbon(rng, tapered=True),
    "blob": polygon_blob,
    "zigzag": zigzag_ribbon,
}


def generate_shape(class_name: str, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return _GENERATORS[class_name](rng)


def write_dataset(root: str | Path, variant: str = "four-class", per_class: int = 40,
                  seed: int = 0) -> dict[str, int]:
    """Write ``<root>/<class>/<index>.png`` mask files; deterministic per seed."""
    if variant not in VARIANTS:
        raise DatasetError(f"unknown synthetic variant {variant!r}; "
                           f"choose from {sorted(VARIANTS)}")
    root = Path(root)
    written = {}
    for ci, cname in enumerate(VARIANTS[variant]):
        cdir = root / cname
        cdir.mkdir(parents=True, exist_ok=True)
        for i in range(per_class):
            bits = generate_shape(cname, seed * 1_000_003 + ci * 10_007 + i)
            save_mask_png(cdir / f"{i:03d}.png", bits)
        written[cname] = per_class
    return written
