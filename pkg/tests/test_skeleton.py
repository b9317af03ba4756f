import numpy as np
import pytest
from scipy import ndimage
from scipy.spatial.distance import cdist

from bscp.errors import SkeletonError
from bscp.mask import from_array, trace_contour
from bscp.skeleton import (Skeleton, associate_thickness, distance_transform,
                           dump_skeleton_overlay_pgm, dump_thickness_table,
                           extract_skeleton, generating_points,
                           reconstruction_coverage)
from conftest import blob_mask, disc_mask, rect_mask

EIGHT = np.ones((3, 3), dtype=bool)


def brute_force_dt(bits):
    """Independent oracle: per-pixel minimum distance to any boundary pixel."""
    interior = ndimage.binary_erosion(bits, structure=EIGHT, border_value=0)
    bys, bxs = np.nonzero(bits & ~interior)
    boundary = np.column_stack([bxs, bys]).astype(float)
    out = np.zeros(bits.shape)
    ys, xs = np.nonzero(bits)
    pts = np.column_stack([xs, ys]).astype(float)
    out[ys, xs] = cdist(pts, boundary).min(axis=1)
    return out


class TestDistanceTransform:
    def test_boundary_pixels_are_zero(self):
        m = disc_mask(12)
        f = distance_transform(m)
        interior = ndimage.binary_erosion(m.bits, structure=EIGHT, border_value=0)
        assert (f.values[m.bits & ~interior] == 0).all()

    def test_disc_center(self):
        m = disc_mask(20)
        f = distance_transform(m)
        assert abs(f.values.max() - 20) <= 1.0

    def test_zero_outside_foreground(self):
        m = disc_mask(10)
        f = distance_transform(m)
        assert (f.values[~m.bits] == 0).all()

    def test_matches_brute_force(self):
        for seed in range(3):
            m = blob_mask(seed, size=64)
            f = distance_transform(m)
            expected = brute_force_dt(m.bits)
            assert np.abs(f.values[m.bits] - expected[m.bits]).max() <= 0.5


class TestExtractSkeleton:
    def test_rectangle_centerline(self):
        m = rect_mask(140, 31)
        f = distance_transform(m)
        sk = extract_skeleton(m, f)
        ys, xs = np.nonzero(m.bits)
        cy = (ys.min() + ys.max()) / 2
        mid = (sk.points[:, 0] > xs.min() + 40) & (sk.points[:, 0] < xs.max() - 40)
        assert mid.any()
        assert np.abs(sk.points[mid, 1] - cy).max() <= 1
        assert np.abs(sk.radius[mid] - 31 / 2).max() <= 1.0

    def test_disc_collapses_to_center(self):
        m = disc_mask(25)
        f = distance_transform(m)
        sk = extract_skeleton(m, f)
        cy, cx = np.unravel_index(np.argmax(f.values), f.values.shape)
        assert np.hypot(sk.points[:, 0] - cx, sk.points[:, 1] - cy).max() <= 2.0

    def test_coverage(self):
        from bscp.synthetic import generate_shape

        shapes = [disc_mask(25), rect_mask(120, 41),
                  from_array(generate_shape("star", 2)),
                  from_array(generate_shape("blob", 2))]
        for m in shapes:
            sk = extract_skeleton(m, distance_transform(m))
            assert reconstruction_coverage(m, sk) >= 0.95

    def test_connected_thin_inside(self):
        for seed in range(3):
            m = blob_mask(seed, size=80)
            sk = extract_skeleton(m, distance_transform(m))
            assert m.bits[sk.points[:, 1], sk.points[:, 0]].all()
            assert (sk.radius > 0).all()
            _, n = ndimage.label(sk.grid, structure=EIGHT)
            assert n == 1

    def test_too_thin_raises(self):
        bits = np.zeros((8, 30), dtype=bool)
        bits[3:5, 2:28] = True
        m = from_array(bits)
        with pytest.raises(SkeletonError):
            extract_skeleton(m, distance_transform(m))


class TestGeneratingPoints:
    def test_rectangle_midpoint_feet(self):
        m = rect_mask(140, 31)
        c = trace_contour(m)
        f = distance_transform(m)
        sk = extract_skeleton(m, f)
        ys, xs = np.nonzero(m.bits)
        cx, cy = (xs.min() + xs.max()) / 2, (ys.min() + ys.max()) / 2
        i = int(np.argmin(np.hypot(sk.points[:, 0] - cx, sk.points[:, 1] - cy)))
        p = tuple(sk.points[i])
        idx = generating_points(p, c)
        pts = c.points[idx]
        top = pts[pts[:, 1] < cy]
        bottom = pts[pts[:, 1] > cy]
        assert len(top) and len(bottom)
        # feet of the perpendicular: directly above/below the skeleton point
        assert np.abs(top[:, 0] - p[0]).min() <= 1.5
        assert np.abs(bottom[:, 0] - p[0]).min() <= 1.5

    def test_disc_center_points_at_radius(self):
        m = disc_mask(20)
        c = trace_contour(m)
        f = distance_transform(m)
        cy, cx = np.unravel_index(np.argmax(f.values), f.values.shape)
        idx = generating_points((cx, cy), c)
        d = np.hypot(*(c.points[idx] - [cx, cy]).T)
        assert np.abs(d - f.values[cy, cx]).max() <= 1.5

    def test_indices_are_valid_contour_indices(self):
        m = blob_mask(2)
        c = trace_contour(m)
        sk = extract_skeleton(m, distance_transform(m))
        for p in sk.points[::5]:
            idx = generating_points(tuple(p), c)
            assert len(np.unique(idx)) == len(idx)
            assert idx.min() >= 0 and idx.max() < len(c.points)

    def test_tangency(self):
        m = blob_mask(4, size=72)
        c = trace_contour(m)
        f = distance_transform(m)
        sk = extract_skeleton(m, f)
        for i in range(0, len(sk), 7):
            p = sk.points[i]
            idx = generating_points(tuple(p), c)
            d = np.hypot(*(c.points[idx] - p).T)
            assert np.abs(d - sk.radius[i]).max() <= 1.5


class TestAssociateThickness:
    def test_constant_ribbon(self):
        from bscp.synthetic import generate_shape

        m = from_array(generate_shape("ribbon_constant", 9))
        c = trace_contour(m)
        sk = extract_skeleton(m, distance_transform(m))
        a = associate_thickness(c, sk)
        # away from the two end caps the local half-width is roughly constant
        ys, xs = np.nonzero(m.bits)
        x_lo = xs.min() + 0.30 * (xs.max() - xs.min())
        x_hi = xs.min() + 0.70 * (xs.max() - xs.min())
        midside = (c.points[:, 0] > x_lo) & (c.points[:, 0] < x_hi)
        half_width = np.median(sk.radius)
        assert np.abs(a.thickness[midside] - half_width).max() <= 2.0

    def test_flagged_points_carry_exact_radii(self):
        m = blob_mask(1, size=72)
        c = trace_contour(m)
        sk = extract_skeleton(m, distance_transform(m))
        a = associate_thickness(c, sk)
        assert a.generating_flags.any()
        assert np.isin(a.thickness[a.generating_flags], sk.radius).all()

    def test_wedge_monotone_sides(self):
        from bscp.synthetic import generate_shape

        m = from_array(generate_shape("wedge", 4))
        c = trace_contour(m)
        sk = extract_skeleton(m, distance_transform(m))
        a = associate_thickness(c, sk)
        ys, xs = np.nonzero(m.bits)
        cy = (ys.min() + ys.max()) / 2
        span = xs.max() - xs.min()
        inner = (c.points[:, 0] > xs.min() + 0.15 * span) & (c.points[:, 0] < xs.max() - 0.15 * span)
        for side in (c.points[:, 1] < cy, c.points[:, 1] >= cy):
            sel = inner & side
            order = np.argsort(c.points[sel, 0])
            th = a.thickness[sel][order]
            assert (np.diff(th) >= -1.0).all()

    def test_total_and_positive(self):
        m = blob_mask(6)
        c = trace_contour(m)
        sk = extract_skeleton(m, distance_transform(m))
        a = associate_thickness(c, sk)
        assert len(a.thickness) == len(c.points)
        assert (a.thickness > 0).all()
        assert a.thickness.max() <= distance_transform(m).values.max()

    def test_empty_skeleton_raises(self):
        m = blob_mask(0)
        c = trace_contour(m)
        empty = Skeleton(points=np.empty((0, 2), dtype=np.int64),
                         radius=np.empty(0), adjacency=np.empty((0, 2), dtype=np.int64),
                         grid=np.zeros(m.bits.shape, dtype=bool))
        with pytest.raises(SkeletonError):
            associate_thickness(c, empty)


def test_debug_dumps(tmp_path):
    m = disc_mask(15)
    c = trace_contour(m)
    f = distance_transform(m)
    sk = extract_skeleton(m, f)
    a = associate_thickness(c, sk)
    pgm = tmp_path / "overlay.pgm"
    table = tmp_path / "thickness.txt"
    dump_skeleton_overlay_pgm(pgm, m, sk)
    dump_thickness_table(table, a)
    header = pgm.read_bytes()[:2]
    assert header == b"P5"
    lines = [ln for ln in table.read_text().splitlines() if not ln.startswith("#")]
    assert len(lines) == len(c.points)
    idx, x, y, th, flag = lines[0].split()
    assert int(idx) == 0 and float(th) > 0 and flag in ("0", "1")
