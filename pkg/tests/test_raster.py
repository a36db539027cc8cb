import numpy as np
import pytest

from artifit.raster import (
    bbox_iou,
    mask_bbox,
    mask_iou,
    mask_to_boundary_polygon,
    polygon_area,
    polygon_perimeter,
    rasterize_polygon,
    rasterize_rings,
    rasterize_rings_window,
    ring_signed_area,
    rings_mask_iou,
    rle_decode,
    rle_encode,
    simplify_ring,
    trace_boundaries,
)


def oracle_raster(rings, width, height):
    """Per-pixel even-odd point-in-polygon, written independently of the
    scanline code. Counts an edge crossing when the pixel center row is in
    [ylo, yhi) and the edge's x at that row is <= the center x."""
    mask = np.zeros((height, width), dtype=bool)
    for py in range(height):
        yc = py + 0.5
        for px in range(width):
            xc = px + 0.5
            crossings = 0
            for ring in rings:
                n = len(ring)
                for k in range(n):
                    x0, y0 = ring[k]
                    x1, y1 = ring[(k + 1) % n]
                    if y0 == y1:
                        continue
                    ylo, yhi = (y0, y1) if y0 < y1 else (y1, y0)
                    if not (ylo <= yc < yhi):
                        continue
                    xint = x0 + (yc - y0) * (x1 - x0) / (y1 - y0)
                    if xint <= xc:
                        crossings += 1
            mask[py, px] = crossings % 2 == 1
    return mask


def random_rings(rng, width, height, max_rings=2):
    rings = []
    for _ in range(int(rng.integers(1, max_rings + 1))):
        n = int(rng.integers(3, 9))
        ring = rng.uniform([-3.0, -3.0], [width + 3.0, height + 3.0], size=(n, 2))
        rings.append(ring)
    return rings


class TestRasterize:
    def test_unit_square_single_pixel(self):
        mask = rasterize_polygon(np.array([[0, 0], [1, 0], [1, 1], [0, 1]]), 4, 4)
        want = np.zeros((4, 4), dtype=bool)
        want[0, 0] = True
        assert np.array_equal(mask, want)

    def test_offgrid_square(self):
        ring = np.array([[0.4, 0.4], [2.6, 0.4], [2.6, 2.6], [0.4, 2.6]])
        mask = rasterize_polygon(ring, 4, 4)
        assert mask[:3, :3].all()
        assert mask.sum() == 9

    def test_matches_oracle(self):
        rng = np.random.default_rng(101)
        for _ in range(60):
            w = int(rng.integers(4, 14))
            h = int(rng.integers(4, 14))
            rings = random_rings(rng, w, h)
            got = rasterize_rings(rings, w, h)
            assert np.array_equal(got, oracle_raster(rings, w, h))

    def test_hole_ring_makes_hole(self):
        outer = np.array([[0, 0], [6, 0], [6, 6], [0, 6]], dtype=float)
        inner = np.array([[2, 2], [4, 2], [4, 4], [2, 4]], dtype=float)
        mask = rasterize_rings([outer, inner], 8, 8)
        assert mask[1, 1] and not mask[3, 3]
        assert mask.sum() == 36 - 4

    def test_degenerate_rings_empty(self):
        assert not rasterize_rings([np.zeros((0, 2))], 4, 4).any()
        assert not rasterize_rings([np.array([[1.0, 1.0], [3.0, 3.0]])], 4, 4).any()


class TestWindowedRaster:
    def test_window_slice_matches_full(self):
        rng = np.random.default_rng(103)
        for _ in range(80):
            w = int(rng.integers(6, 20))
            h = int(rng.integers(6, 20))
            rings = random_rings(rng, w, h)
            full = rasterize_rings(rings, w, h)
            win = rasterize_rings_window(rings, w, h)
            if win is None:
                assert not full.any()
                continue
            sub, ox, oy = win
            sh, sw = sub.shape
            assert np.array_equal(sub, full[oy : oy + sh, ox : ox + sw])
            outside = full.copy()
            outside[oy : oy + sh, ox : ox + sw] = False
            assert not outside.any()

    def test_rings_mask_iou_equals_full_iou(self):
        rng = np.random.default_rng(107)
        for _ in range(60):
            w = int(rng.integers(6, 16))
            h = int(rng.integers(6, 16))
            rings = random_rings(rng, w, h)
            target = rng.uniform(size=(h, w)) < 0.4
            got = rings_mask_iou(rings, target)
            want = mask_iou(rasterize_rings(rings, w, h), target)
            assert got == want

    def test_fully_outside(self):
        ring = np.array([[50, 50], [60, 50], [55, 60]], dtype=float)
        assert rasterize_rings_window([ring], 10, 10) is None
        assert rings_mask_iou([ring], np.ones((10, 10), dtype=bool)) == 0.0


class TestIoU:
    def test_mask_iou_counts(self):
        a = np.zeros((4, 4), dtype=bool)
        b = np.zeros((4, 4), dtype=bool)
        a[:2, :2] = True  # 4 px
        b[1:3, :2] = True  # 4 px, overlap 2
        assert mask_iou(a, b) == pytest.approx(2 / 6)

    def test_mask_iou_empty(self):
        z = np.zeros((3, 3), dtype=bool)
        assert mask_iou(z, z) == 0.0

    def test_mask_iou_shape_mismatch(self):
        with pytest.raises(ValueError):
            mask_iou(np.zeros((2, 2), bool), np.zeros((3, 3), bool))

    def test_bbox_iou_frozen(self):
        assert bbox_iou((0, 0, 2, 2), (1, 0, 3, 2)) == pytest.approx(2 / 6)
        assert bbox_iou((0, 0, 1, 1), (5, 5, 6, 6)) == 0.0
        assert bbox_iou((0, 0, 4, 3), (0, 0, 4, 3)) == 1.0

    def test_mask_bbox(self):
        m = np.zeros((5, 7), dtype=bool)
        m[1, 2] = m[3, 4] = True
        assert mask_bbox(m) == (2.0, 1.0, 5.0, 4.0)
        assert mask_bbox(np.zeros((2, 2), bool)) is None


class TestRLE:
    def test_frozen_counts(self):
        assert rle_encode(np.array([[0, 1], [1, 0]], dtype=bool)) == [1, 2, 1]
        assert rle_encode(np.ones((2, 2), dtype=bool)) == [0, 4]
        assert rle_encode(np.zeros((2, 2), dtype=bool)) == [4]

    def test_round_trip(self):
        rng = np.random.default_rng(109)
        for _ in range(500):
            h = int(rng.integers(1, 12))
            w = int(rng.integers(1, 12))
            mask = rng.uniform(size=(h, w)) < rng.uniform()
            counts = rle_encode(mask)
            assert np.array_equal(rle_decode(counts, w, h), mask)
            # alternating runs never contain a zero except a leading one
            assert all(c > 0 for c in counts[1:])

    def test_decode_validation(self):
        with pytest.raises(ValueError):
            rle_decode([1, 2], 2, 2)
        with pytest.raises(ValueError):
            rle_decode([-1, 5], 2, 2)


class TestBoundaryTrace:
    def test_single_pixel_ring(self):
        mask = np.zeros((3, 3), dtype=bool)
        mask[1, 1] = True
        rings = trace_boundaries(mask)
        assert len(rings) == 1
        assert sorted(map(tuple, rings[0])) == [(1, 1), (1, 2), (2, 1), (2, 2)]
        assert ring_signed_area(rings[0]) == -1.0

    def test_round_trip_random_masks(self):
        rng = np.random.default_rng(113)
        for _ in range(300):
            h = int(rng.integers(1, 16))
            w = int(rng.integers(1, 16))
            mask = rng.uniform(size=(h, w)) < rng.uniform(0.2, 0.8)
            rings = trace_boundaries(mask)
            back = rasterize_rings(rings, w, h) if rings else np.zeros((h, w), bool)
            assert np.array_equal(back, mask)

    def test_integer_corner_vertices(self):
        rng = np.random.default_rng(127)
        mask = rng.uniform(size=(9, 9)) < 0.5
        for ring in trace_boundaries(mask):
            assert np.array_equal(ring, np.round(ring))
            assert len(ring) >= 4

    def test_hole_sign_convention(self):
        mask = np.ones((4, 4), dtype=bool)
        mask[1:3, 1:3] = False
        areas = sorted(ring_signed_area(r) for r in trace_boundaries(mask))
        assert areas == [-16.0, 4.0]

    def test_checkerboard_round_trip(self):
        mask = np.indices((6, 6)).sum(axis=0) % 2 == 0
        rings = trace_boundaries(mask)
        assert np.array_equal(rasterize_rings(rings, 6, 6), mask)


class TestSimplify:
    def test_collinear_vertex_dropped(self):
        ring = np.array([[0, 0], [5, 0], [10, 0], [10, 10], [0, 10]], dtype=float)
        out = simplify_ring(ring, 1.0)
        assert len(out) == 4
        assert (5.0, 0.0) not in set(map(tuple, out))

    def test_zero_tolerance_copies(self):
        ring = np.array([[0, 0], [5, 0.4], [10, 0], [5, 9]], dtype=float)
        out = simplify_ring(ring, 0.0)
        assert np.array_equal(out, ring)
        assert out is not ring

    def test_mask_polygon_square_survives(self):
        mask = np.zeros((8, 8), dtype=bool)
        mask[2:5, 3:6] = True
        rings = mask_to_boundary_polygon(mask, simplify_tol=1.0)
        assert np.array_equal(rasterize_rings(rings, 8, 8), mask)

    def test_one_pixel_collapses_at_default_tol(self):
        mask = np.zeros((5, 5), dtype=bool)
        mask[2, 2] = True
        rings = mask_to_boundary_polygon(mask, simplify_tol=1.0)
        back = rasterize_rings(rings, 5, 5)
        assert not back.any()

    def test_two_pixel_block_survives(self):
        mask = np.zeros((6, 6), dtype=bool)
        mask[2:4, 2:4] = True
        rings = mask_to_boundary_polygon(mask, simplify_tol=1.0)
        assert np.array_equal(rasterize_rings(rings, 6, 6), mask)


class TestMaskToPolygon:
    def test_empty_raises(self):
        with pytest.raises(ValueError):
            mask_to_boundary_polygon(np.zeros((4, 4), dtype=bool))

    def test_holes_filled(self):
        mask = np.ones((6, 6), dtype=bool)
        mask[2:4, 2:4] = False
        rings = mask_to_boundary_polygon(mask, simplify_tol=0.0)
        back = rasterize_rings(rings, 6, 6)
        assert back.all()  # the hole is gone

    def test_disjoint_components(self):
        mask = np.zeros((6, 10), dtype=bool)
        mask[1:3, 1:3] = True
        mask[3:5, 6:9] = True
        rings = mask_to_boundary_polygon(mask, simplify_tol=0.0)
        assert len(rings) == 2
        assert np.array_equal(rasterize_rings(rings, 10, 6), mask)

    def test_exact_at_zero_tolerance(self):
        rng = np.random.default_rng(131)
        for _ in range(100):
            mask = rng.uniform(size=(10, 10)) < 0.45
            if not mask.any():
                continue
            rings = mask_to_boundary_polygon(mask, simplify_tol=0.0)
            back = rasterize_rings(rings, 10, 10)
            # outer shapes only: original true pixels all covered, and any
            # extra coverage sits inside former holes
            assert (back & mask).sum() == mask.sum()


class TestPolygonMeasures:
    def test_unit_square(self):
        ring = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
        assert polygon_area(ring) == 1.0
        assert polygon_perimeter(ring) == 4.0

    def test_degenerate(self):
        assert polygon_area(np.array([[0.0, 0.0], [1.0, 1.0]])) == 0.0
        assert polygon_perimeter(np.array([[2.0, 3.0]])) == 0.0
