from parkour_lab.foothold import (
    FootholdTrack,
    advance_cursor,
    build_track,
    polar_prior,
    wall_band_centers,
    wrap_angle,
    write_track,
)
from parkour_lab.terrain import (
    GAP,
    Family,
    Heightfield,
    TerrainSpec,
    edge_distance,
    generate,
)
from hypothesis import given, settings, strategies as st
import numpy as np
import os
import tempfile
import unittest


class Pose:
    """Minimal stand-in exposing what the prior reads from a robot state"""

    def __init__(self, position, yaw, left, right):
        self.position = np.asarray(position, dtype=np.float64)
        self.yaw = yaw
        self.left = np.asarray(left, dtype=np.float64)
        self.right = np.asarray(right, dtype=np.float64)

    def front_feet(self):
        return self.left, self.right


def lane(family, level, seed):
    spec = TerrainSpec(family, level, seed)
    hf = generate(spec)
    return spec, hf, edge_distance(hf)


def rotate(points, angle):
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return np.asarray(points) @ rot.T


class Methods(unittest.TestCase):
    def test_flat_track(self):
        spec, hf, edf = lane(Family.FLAT, 0, 0)
        track = build_track(hf, edf, spec, d_safe=0.1)
        self.assertEqual(len(track), 18)
        self.assertFalse(np.any(track.on_wall))
        np.testing.assert_allclose(np.diff(track.points[:, 0]), 1.0)
        self.assertEqual(track.cursor, 0)

    def test_wall_footholds(self):
        spec, hf, edf = lane(Family.WALL_ASSISTED_GAP, 9, 4)
        track = build_track(hf, edf, spec)
        centers = wall_band_centers(hf)
        self.assertGreater(len(centers), 0)
        self.assertEqual(int(track.on_wall.sum()), len(centers))
        on_wall = track.points[track.on_wall]
        for (cx, cy), point in zip(centers, on_wall):
            self.assertLessEqual(np.hypot(point[0] - cx, point[1] - cy), 0.05)

    def test_filter_soundness(self):
        families = [
            Family.WALL_ASSISTED_GAP,
            Family.SURMOUNTING,
            Family.STEPPING_STONES,
        ]
        for family in families:
            for seed in range(5):
                spec, hf, edf = lane(family, 9, seed)
                track = build_track(hf, edf, spec, d_safe=0.1)
                self.assertTrue(np.all(np.diff(track.points[:, 0]) > 0))

                ei, ej = np.nonzero(edf.edges)
                for x, y, z in track.points:
                    i, j = hf.nearest_cell(x, y)
                    d = hf.cell_size * np.sqrt(
                        float(np.min((ei - i) ** 2 + (ej - j) ** 2))
                    )
                    self.assertGreater(d, 0.1)
                    self.assertNotEqual(hf.labels[i, j], GAP)

    def test_build_errors(self):
        spec = TerrainSpec(Family.FLAT, 0, 0)
        hf = generate(spec)
        small = edge_distance(Heightfield(np.zeros((4, 4)), 0.05))
        self.assertRaises(ValueError, build_track, hf, small, spec)

        pit = Heightfield(
            np.zeros((400, 80)),
            0.05,
            origin=(0.025, -1.975),
            labels=np.full((400, 80), GAP),
        )
        self.assertRaises(
            RuntimeError, build_track, pit, edge_distance(pit), spec
        )

    def test_track_errors(self):
        self.assertRaises(ValueError, FootholdTrack, np.zeros((0, 3)), [])
        self.assertRaises(
            ValueError,
            FootholdTrack,
            [[1.0, 0.0, 0.0], [1.0, 0.5, 0.0]],
            [False, False],
        )

    def test_prior_basics(self):
        track = FootholdTrack([[1.0, 1.0, 0.0], [2.0, 0.0, 0.0]], [0, 0])
        at_target = Pose([0.0, 0.0, 0.3], 0.0, [1, 1, 0], [1, 1, 0])
        prior = polar_prior(at_target, track)
        self.assertEqual(prior.d_left, 0.0)
        self.assertEqual(prior.d_right, 0.0)
        self.assertAlmostEqual(prior.psi, np.pi / 4, places=15)
        self.assertEqual(prior.psi_next, 0.0)
        self.assertEqual(prior.as_array().shape, (4,))

        # The last foothold reuses its own direction
        track.cursor = 1
        prior = polar_prior(at_target, track)
        self.assertEqual(prior.psi, prior.psi_next)

    def test_planar_distance(self):
        track = FootholdTrack([[1.0, 0.0, 0.0]], [0])
        pose = Pose([0, 0, 0.3], 0.0, [1, 0, 0.4], [1, 0, -0.3])
        self.assertAlmostEqual(polar_prior(pose, track).d_left, 0.4)
        self.assertEqual(polar_prior(pose, track, planar=True).d_left, 0.0)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_frame_invariance(self, seed):
        rng = np.random.default_rng(seed)
        xs = np.cumsum(rng.uniform(0.3, 1.5, size=4))
        points = np.column_stack(
            [xs, rng.uniform(-1, 1, 4), rng.uniform(-0.5, 0.5, 4)]
        )
        base = rng.uniform(-2, 2, 3)
        left, right = rng.uniform(-2, 2, (2, 3))
        yaw = rng.uniform(-np.pi, np.pi)
        cursor = int(rng.integers(0, 4))

        track = FootholdTrack(points, np.zeros(4))
        track.cursor = cursor
        reference = polar_prior(Pose(base, yaw, left, right), track)

        shift = rng.uniform(-50, 50, 3)
        moved = FootholdTrack(points + shift, np.zeros(4))
        moved.cursor = cursor
        translated = polar_prior(
            Pose(base + shift, yaw, left + shift, right + shift), moved
        )
        self.assertAlmostEqual(translated.psi, reference.psi, delta=1e-9)
        self.assertAlmostEqual(
            translated.psi_next, reference.psi_next, delta=1e-9
        )

        angle = rng.uniform(-np.pi, np.pi)
        direction = rotate([1.0, 0.0, 0.0], angle)[:2]
        turned = FootholdTrack(rotate(points, angle), np.zeros(4), direction)
        turned.cursor = cursor
        rotated = polar_prior(
            Pose(
                rotate(base, angle),
                yaw + angle,
                rotate(left, angle),
                rotate(right, angle),
            ),
            turned,
        )
        self.assertAlmostEqual(rotated.d_left, reference.d_left, delta=1e-9)
        self.assertAlmostEqual(rotated.d_right, reference.d_right, delta=1e-9)

    @given(st.floats(min_value=-10 * np.pi, max_value=10 * np.pi))
    def test_wrap(self, angle):
        wrapped = wrap_angle(angle)
        self.assertGreater(wrapped, -np.pi)
        self.assertLessEqual(wrapped, np.pi)
        self.assertAlmostEqual(np.cos(wrapped), np.cos(angle), delta=1e-9)
        self.assertAlmostEqual(np.sin(wrapped), np.sin(angle), delta=1e-9)

    def test_wrap_boundaries(self):
        self.assertEqual(wrap_angle(np.pi), np.pi)
        self.assertEqual(wrap_angle(-np.pi), np.pi)
        self.assertEqual(wrap_angle(0.0), 0.0)
        self.assertEqual(wrap_angle(np.array([0.0, np.pi])).shape, (2,))

    def test_advance_arrival(self):
        track = FootholdTrack([[1.0, 0, 0], [2.0, 0, 0]], [0, 0])
        pose = Pose([0.7, 0, 0.3], 0.0, [1, 0, 0], [1, 0, 0])
        track, arrived = advance_cursor(pose, track, eps=0.2)
        self.assertTrue(arrived)
        self.assertEqual(track.cursor, 1)

    def test_advance_overfly(self):
        track = FootholdTrack([[1.0, 0, 0], [2.0, 0, 0]], [0, 0])
        pose = Pose([1.5, 0, 0.3], 0.0, [1.4, 0, 0], [1.4, 0, 0])
        track, arrived = advance_cursor(pose, track, eps=0.2)
        self.assertFalse(arrived)
        self.assertEqual(track.cursor, 1)

        # Nothing happens while the feet are away and the base is behind
        idle = Pose([1.5, 0, 0.3], 0.0, [1.4, 0, 0], [1.4, 0, 0])
        track, arrived = advance_cursor(idle, track, eps=0.2)
        self.assertEqual(track.cursor, 1)
        self.assertFalse(track.completed)

        # The cursor is capped at the last foothold
        done = Pose([2.5, 0, 0.3], 0.0, [2.4, 0, 0], [2.4, 0, 0])
        track, _ = advance_cursor(done, track, eps=0.2)
        self.assertEqual(track.cursor, 1)
        self.assertTrue(track.completed)

    def test_straight_walk(self):
        spec, hf, edf = lane(Family.FLAT, 0, 1)
        track = build_track(hf, edf, spec)
        visited = [track.cursor]
        for x in np.arange(0.5, 19.9, 0.05):
            z = 0.0
            pose = Pose(
                [x, 0.0, 0.3],
                0.0,
                [x + 0.2, 0.12, z],
                [x + 0.2, -0.12, z],
            )
            track, _ = advance_cursor(pose, track)
            visited.append(track.cursor)
        self.assertTrue(track.completed)
        steps = np.diff(visited)
        self.assertTrue(np.all((steps == 0) | (steps == 1)))
        self.assertEqual(sorted(set(visited)), list(range(len(track))))

    def test_reset(self):
        track = FootholdTrack([[1.0, 0, 0], [2.0, 0, 0], [3.0, 0, 0]], [0] * 3)
        track.reset(base_position=[1.5, 0.0, 0.3])
        self.assertEqual(track.cursor, 1)
        track.reset(base_position=[5.0, 0.0, 0.3])
        self.assertEqual(track.cursor, 2)
        copy = track.copy()
        copy.cursor = 0
        self.assertEqual(track.cursor, 2)

    def test_track_dump(self):
        track = FootholdTrack([[1.0, 0.5, 0.25], [2.0, 0, 0]], [True, False])
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "track.txt")
            write_track(track, path)
            with open(path) as handle:
                lines = handle.read().splitlines()
        self.assertEqual(lines, ["1.0 0.5 0.25 1", "2.0 0.0 0.0 0"])


if __name__ == "__main__":
    unittest.main()
