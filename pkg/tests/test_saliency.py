import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutonce import ContractError, ParameterError, augment, boundary_field, orient_and_split

OFFSETS = {
    8: ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)),
    4: ((-1, 0), (0, -1), (0, 1), (1, 0)),
}


def reference_boundary(raw, k):
    """Per-pixel loop over an explicitly replicate-padded map."""
    h, w = raw.shape
    padded = np.pad(raw, 1, mode="edge")
    out = np.empty_like(raw, dtype=np.float64)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for dy, dx in OFFSETS[k]:
                acc = acc + abs(raw[y, x] - padded[1 + y + dy, 1 + x + dx])
            out[y, x] = acc / k
    return out


class TestBoundaryField:
    def test_constant_map_is_zero(self):
        assert np.array_equal(boundary_field(np.full((5, 7), 3.25)), np.zeros((5, 7)))

    def test_center_spike(self):
        m = np.zeros((3, 3))
        m[1, 1] = 1.0
        b = boundary_field(m, 8)
        assert b[1, 1] == 1.0
        # corner (0,0): after padding only the interior diagonal neighbor differs
        assert b[0, 0] == 1.0 / 8.0

    def test_matches_reference_loop(self, rng):
        for k in (4, 8):
            for _ in range(5):
                h, w = int(rng.integers(2, 12)), int(rng.integers(2, 12))
                m = rng.standard_normal((h, w))
                assert np.array_equal(boundary_field(m, k), reference_boundary(m, k))

    def test_rejects_degenerate(self):
        with pytest.raises(ParameterError):
            boundary_field(np.zeros((1, 5)), 8)
        with pytest.raises(ParameterError):
            boundary_field(np.zeros((3, 3)), 6)

    def test_nonnegative(self, rng):
        m = rng.standard_normal((9, 9))
        assert (boundary_field(m, 8) >= 0).all()

    def test_translation_equivariant_in_interior(self, rng):
        base = np.zeros((16, 16))
        patt = rng.standard_normal((3, 3))
        a = base.copy()
        a[4:7, 4:7] = patt
        b = base.copy()
        b[6:9, 7:10] = patt
        ba = boundary_field(a, 8)
        bb = boundary_field(b, 8)
        assert np.array_equal(ba[3:8, 3:8], bb[5:10, 6:11])


class TestAugment:
    def test_constant_raw(self):
        raw = np.full((4, 4), 2.5)
        assert np.array_equal(augment(raw, boundary_field(raw)), raw)

    def test_self_subtraction(self, rng):
        m = rng.standard_normal((4, 4))
        assert np.array_equal(augment(m, m), np.zeros((4, 4)))

    def test_elementwise_oracle(self, rng):
        a, b = rng.standard_normal((5, 6)), rng.standard_normal((5, 6))
        out = augment(a, b)
        for y in range(5):
            for x in range(6):
                assert out[y, x] == a[y, x] - b[y, x]

    def test_shape_mismatch(self):
        with pytest.raises(ContractError):
            augment(np.zeros((2, 2)), np.zeros((3, 2)))


class TestOrientAndSplit:
    def test_corner_rule(self):
        # above-mean side holds all four corners -> flip
        m = np.full((4, 4), 1.0)
        m[1:3, 1:3] = -3.0
        split = orient_and_split(m, m)
        assert split.flipped and split.flip_reason == "corner_rule"
        assert split.foreground[1, 1] and not split.foreground[0, 0]

    def test_maxmin_rule_and_flip_outcome(self):
        # 2x2 map (-3, 1, 1, 1): every cell is a corner, three sit above the
        # mean, so the corner rule takes priority; the magnitude test would
        # also fire.  After flipping, the single most-negative cell is the
        # foreground.
        m = np.array([[-3.0, 1.0], [1.0, 1.0]])
        split = orient_and_split(m, m)
        assert split.flipped
        assert split.flip_reason == "corner_rule"
        assert split.foreground.sum() == 1 and split.foreground[0, 0]

    def test_maxmin_rule_fires_without_corners(self):
        # corners sit below the mean (rule 1 silent) while the deepest value
        # outweighs the highest -> magnitude rule flips
        m = np.full((5, 5), 0.2)
        m[0, 0] = m[0, -1] = m[-1, 0] = m[-1, -1] = -0.5
        m[2, 2] = -4.0
        split = orient_and_split(m, m)
        assert split.flipped and split.flip_reason == "maxmin_rule"
        assert split.foreground[2, 2]

    def test_no_flip_when_balanced(self):
        # symmetric values, at most two corners above the mean
        m = np.zeros((3, 3))
        m[0, 0] = 2.0
        m[2, 2] = -2.0
        split = orient_and_split(m, m)
        assert not split.flipped and split.flip_reason == "none"

    def test_threshold_is_mean_and_partition(self, rng):
        raw = rng.standard_normal((6, 6))
        aug = rng.standard_normal((6, 6))
        split = orient_and_split(raw, aug)
        v = split.oriented.reshape(6, 6)
        assert split.threshold == pytest.approx(v.mean(), abs=0)
        assert np.array_equal(split.foreground, v > split.threshold)
        # foreground and background partition the grid
        assert (split.foreground | ~split.foreground).all()

    @given(st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_orientation_depends_on_content_not_sign(self, seed):
        rng = np.random.default_rng(seed)
        raw = rng.standard_normal((5, 5))
        aug = raw - boundary_field(raw, 8)
        a = orient_and_split(raw, aug)
        b = orient_and_split(-raw, -aug)
        flips = int(a.flipped) + int(b.flipped)
        if flips == 1:  # exactly one orientation trips a rule
            assert np.array_equal(a.foreground, b.foreground)

    def test_scale_invariance(self, rng):
        raw = rng.standard_normal((7, 7))
        aug = raw - boundary_field(raw, 8)
        a = orient_and_split(raw, aug)
        b = orient_and_split(3.7 * raw, 3.7 * aug)
        assert a.flipped == b.flipped and a.flip_reason == b.flip_reason
        assert np.array_equal(a.foreground, b.foreground)
