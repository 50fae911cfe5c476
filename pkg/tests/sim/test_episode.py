from parkour_lab.foothold import FootholdTrack, build_track
from parkour_lab.sim import (
    EpisodeConfig,
    Outcome,
    RobotState,
    TrajectoryRecorder,
    check_termination,
    read_traj,
    reset,
    step,
)
from parkour_lab.sim.dynamics import ContactReport
from parkour_lab.terrain import (
    GAP,
    WALL,
    Family,
    Heightfield,
    TerrainSpec,
    edge_distance,
    generate,
    sample_heights,
)
import numpy as np
import os
import tempfile
import unittest


def flat_setup(seed=0):
    spec = TerrainSpec(Family.FLAT, 0, seed)
    hf = generate(spec)
    return hf, build_track(hf, edge_distance(hf), spec)


def report(body_force):
    zeros = np.zeros(4)
    return ContactReport(
        zeros,
        zeros,
        zeros,
        0.0,
        np.zeros(4, dtype=bool),
        0,
        body_force,
        0.0,
        np.zeros((4, 3)),
    )


class Methods(unittest.TestCase):
    def test_config_errors(self):
        self.assertRaises(ValueError, EpisodeConfig, sim_dt=0.0)
        self.assertRaises(ValueError, EpisodeConfig, control_decimation=0)
        self.assertAlmostEqual(EpisodeConfig().control_dt, 0.02)

    def test_reset_on_flat(self):
        hf, track = flat_setup()
        state = reset(hf, track, seed=3)
        ground = sample_heights(hf, state.feet[:, 0], state.feet[:, 1])
        self.assertTrue(np.all(ground - state.feet[:, 2] <= 1e-3))
        self.assertTrue(np.all(state.feet[:, 2] - ground < 0.1))
        self.assertEqual(track.cursor, 0)
        self.assertGreater(track.current()[0], state.position[0])

    def test_reset_determinism(self):
        hf, track = flat_setup()
        a = reset(hf, track, seed=9).to_array()
        b = reset(hf, track, seed=9).to_array()
        np.testing.assert_array_equal(a, b)
        c = reset(hf, track, seed=10).to_array()
        self.assertFalse(np.array_equal(a, c))

    def test_reset_perturbation_bounds(self):
        hf, track = flat_setup()
        config = EpisodeConfig()
        rolls, pitches = [], []
        for seed in range(1000):
            state = reset(hf, track, seed=seed, config=config)
            roll, pitch, yaw = state.euler
            rolls.append(roll)
            pitches.append(pitch)
            self.assertLessEqual(abs(yaw), config.yaw_noise + 1e-12)
        self.assertLessEqual(
            np.max(np.abs(rolls)), config.roll_noise + 1e-12
        )
        self.assertLessEqual(
            np.max(np.abs(pitches)), config.pitch_noise + 1e-12
        )
        # Uniform perturbations spread across the whole range
        self.assertGreater(np.max(rolls), 0.8 * config.roll_noise)
        self.assertLess(np.min(pitches), -0.8 * config.pitch_noise)

    def test_reset_requires_start_pad(self):
        hf, track = flat_setup()
        labels = np.array(hf.labels)
        labels[:40, :] = GAP
        pit = Heightfield(hf.heights, hf.cell_size, hf.origin, labels)
        self.assertRaises(RuntimeError, reset, pit, track, 0)

    def test_termination(self):
        hf, _ = flat_setup()
        config = EpisodeConfig()
        running = RobotState.at_rest((5.0, 0.0, 0.3))
        self.assertEqual(
            check_termination(running, config, hf), Outcome.RUNNING
        )
        self.assertFalse(Outcome.RUNNING.done)

        finished = RobotState.at_rest((18.0, 0.0, 0.3))
        self.assertEqual(
            check_termination(finished, config, hf), Outcome.FINISHED
        )
        rolled = RobotState.at_rest((5.0, 0.0, 0.3), roll=np.pi / 2)
        self.assertEqual(check_termination(rolled, config, hf), Outcome.FELL)
        low = RobotState.at_rest((5.0, 0.0, 0.05))
        self.assertEqual(check_termination(low, config, hf), Outcome.FELL)
        self.assertEqual(
            check_termination(running, config, hf, step_count=1000),
            Outcome.TIMEOUT,
        )
        self.assertEqual(
            check_termination(running, config, hf, report=report(1000.0)),
            Outcome.COLLIDED,
        )
        broken = running.copy()
        broken.valid = False
        self.assertEqual(check_termination(broken, config, hf), Outcome.FELL)

    def test_pit_is_a_fall(self):
        hf = generate(TerrainSpec(Family.STEPPING_STONES, 0, 0))
        state = RobotState.at_rest((10.0, 0.0, -0.69))
        # Legal height above the pit floor, but below the lane surface
        self.assertEqual(
            check_termination(state, EpisodeConfig(), hf), Outcome.FELL
        )

    def test_grazing_wall_keeps_running(self):
        # Steep wall whose foot stays clear of the left feet while the
        # lower left box edge dips 1 cm into it
        cs = 0.01
        ys = -1.995 + cs * np.arange(400)
        slope = np.tan(np.radians(85.0))
        y0 = 0.15 - 0.21 / slope
        profile = slope * np.maximum(0.0, ys - y0)
        heights = np.repeat(profile[None, :], 1000, axis=0)
        labels = np.where(heights > 0, WALL, 0).astype(np.int8)
        hf = Heightfield(heights, cs, (0.005, -1.995), labels)

        state = RobotState.at_rest((5.0, 0.0, 0.3))
        state, contact = step(state, np.zeros(12), hf)
        self.assertGreater(contact.n_collisions, 0)
        self.assertLess(contact.body_force, EpisodeConfig().collision_force)
        self.assertEqual(
            check_termination(state, EpisodeConfig(), hf, 1, contact),
            Outcome.RUNNING,
        )

    def test_trajectory_dump(self):
        hf, track = flat_setup()
        state = reset(hf, track, seed=0)
        recorder = TrajectoryRecorder()
        for i in range(5):
            recorder.record(i, 0.02 * i, state, track.cursor, Outcome.RUNNING)
            state, _ = step(state, np.zeros(12), hf)
        frame = recorder.to_frame()
        self.assertEqual(len(frame), 5)

        with tempfile.TemporaryDirectory() as tmp:
            binary = os.path.join(tmp, "episode.traj")
            recorder.write(binary)
            with open(binary, "rb") as handle:
                self.assertEqual(handle.read(5), b"TRAJ1")
            loaded = read_traj(binary)
            np.testing.assert_array_equal(loaded.values, frame.values)
            self.assertEqual(list(loaded.columns), list(frame.columns))

            text = os.path.join(tmp, "episode.csv")
            recorder.write(text)
            with open(text) as handle:
                self.assertTrue(handle.readline().startswith("step,time,x"))

            with open(binary, "wb") as handle:
                handle.write(b"NOPE")
            self.assertRaises(ValueError, read_traj, binary)

    def test_track_reset_on_custom_track(self):
        hf, _ = flat_setup()
        points = [[0.5, 0, 0], [1.5, 0, 0], [2.5, 0, 0]]
        track = FootholdTrack(points, [0] * 3)
        reset(hf, track, seed=0)
        self.assertEqual(track.cursor, 1)


if __name__ == "__main__":
    unittest.main()
