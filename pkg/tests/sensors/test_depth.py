from parkour_lab.sensors import (
    CameraConfig,
    CameraPose,
    DepthImage,
    DepthPipeline,
    read_depth,
    render_depth,
    write_depth,
)
from parkour_lab.sim import RobotState
from parkour_lab.terrain import Heightfield
import numpy as np
import os
import tempfile
import unittest


def flat_ground(cell_size=0.05):
    rows, cols = int(4.0 / cell_size), int(4.0 / cell_size)
    half = 0.5 * cell_size
    return Heightfield(np.zeros((rows, cols)), cell_size, (half, -2 + half))


def wall_scene():
    # Floor up to x = 2, then a 5 m block; the bilinear ramp between the
    # two cell centers crosses z = 0.5 at x = 1.996
    cs = 0.01
    heights = np.zeros((400, 400))
    heights[200:, :] = 5.0
    return Heightfield(heights, cs, (0.005, -1.995))


def plane_oracle(pose, config, height):
    """Axis depth of every pixel against the plane z = height"""
    local = config.ray_directions().reshape(-1, 3)
    dirs = pose.rotation.apply(local)
    rise = height - pose.position[2]
    with np.errstate(divide="ignore"):
        t = np.where(dirs[:, 2] < 0, rise / dirs[:, 2], np.inf)
    depth = np.clip(t * local[:, 0], config.z_min, config.z_max)
    return depth.reshape(config.height, config.width)


def center(image):
    h, w = image.height, image.width
    return image.values[h // 2 - 1 : h // 2 + 1, w // 2 - 1 : w // 2 + 1]


class Methods(unittest.TestCase):
    def test_config_errors(self):
        self.assertRaises(ValueError, CameraConfig, width=0)
        self.assertRaises(ValueError, CameraConfig, z_min=3.0, z_max=1.0)
        self.assertRaises(ValueError, CameraConfig, hfov_deg=180.0)
        self.assertRaises(ValueError, CameraConfig, march_step=0.0)

    def test_ray_directions(self):
        config = CameraConfig()
        rays = config.ray_directions()
        self.assertEqual(rays.shape, (48, 64, 3))
        np.testing.assert_allclose(np.linalg.norm(rays, axis=-1), 1.0)
        # Left image columns look toward +y, top rows look up
        self.assertGreater(rays[0, 0, 1], 0)
        self.assertGreater(rays[0, 0, 2], 0)
        edge = np.degrees(np.arctan2(-rays[24, -1, 1], rays[24, -1, 0]))
        self.assertAlmostEqual(edge, 43.5, delta=1.0)

    def test_facing_wall(self):
        config = CameraConfig()
        pose = CameraPose.from_euler((0.996, 0.0, 0.5))
        image = render_depth(wall_scene(), pose, config)
        np.testing.assert_allclose(
            center(image), 1.0, atol=2 * config.march_step
        )

    def test_pitched_over_flat_ground(self):
        config = CameraConfig()
        height = 0.5
        pose = CameraPose.from_euler((1.0, 0.0, height), pitch=-np.pi / 4)
        image = render_depth(flat_ground(), pose, config)
        np.testing.assert_allclose(
            image.values,
            plane_oracle(pose, config, 0.0),
            atol=2 * config.march_step,
        )
        np.testing.assert_allclose(
            center(image), height * np.sqrt(2.0), atol=0.05
        )

    def test_raised_plateau(self):
        config = CameraConfig(width=16, height=12)
        hf = flat_ground()
        hf = Heightfield(np.full(hf.heights.shape, 0.3), 0.05, hf.origin)
        pose = CameraPose.from_euler((1.0, 0.5, 1.2), pitch=-1.0, yaw=0.3)
        image = render_depth(hf, pose, config)
        np.testing.assert_allclose(
            image.values,
            plane_oracle(pose, config, 0.3),
            atol=2 * config.march_step,
        )

    def test_horizon_misses(self):
        config = CameraConfig()
        pose = CameraPose.from_euler((1.0, 0.0, 1.0), pitch=0.7)
        image = render_depth(flat_ground(), pose, config)
        self.assertTrue(np.all(image.values == config.z_max))
        np.testing.assert_array_equal(image.normalized(), 1.0)

    def test_clip_range_and_determinism(self):
        config = CameraConfig()
        hf = wall_scene()
        pose = CameraPose.from_euler((1.2, 0.1, 0.4), pitch=-0.2, yaw=0.4)
        first = render_depth(hf, pose, config)
        second = render_depth(hf, pose, config)
        np.testing.assert_array_equal(first.values, second.values)
        self.assertTrue(np.all(first.values >= config.z_min))
        self.assertTrue(np.all(first.values <= config.z_max))

    def test_approaching_wall(self):
        config = CameraConfig(width=8, height=6)
        hf = wall_scene()
        depths = []
        for x in np.arange(0.5, 2.0, 0.1):
            pose = CameraPose.from_euler((x, 0.0, 0.5))
            depths.append(center(render_depth(hf, pose, config)).mean())
        depths = np.array(depths)
        clamped = depths <= config.z_min
        self.assertTrue(np.any(clamped))
        free = depths[~clamped]
        self.assertTrue(np.all(np.diff(free) < 0))
        self.assertTrue(np.all(np.diff(depths) <= 0))
        # Inside the terrain everything reads z_min
        pose = CameraPose.from_euler((3.0, 0.0, 0.5))
        inside = render_depth(hf, pose, config)
        self.assertTrue(np.all(inside.values == config.z_min))

    def test_mounted_camera(self):
        config = CameraConfig()
        state = RobotState.at_rest((2.0, 0.0, 0.3))
        pose = CameraPose.mounted(state, config)
        np.testing.assert_allclose(pose.position, (2.3, 0.0, 0.35))
        axis = pose.rotation.apply([1.0, 0.0, 0.0])
        self.assertAlmostEqual(axis[2], -0.5)
        image = render_depth(flat_ground(), pose, config)
        np.testing.assert_allclose(
            image.values,
            plane_oracle(pose, config, 0.0),
            atol=2 * config.march_step,
        )

    def test_depth_file(self):
        image = render_depth(
            flat_ground(),
            CameraPose.from_euler((1.0, 0.0, 0.5), pitch=-0.5),
            CameraConfig(width=6, height=4),
        )
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "frame.dpth")
            write_depth(image, path)
            with open(path) as handle:
                self.assertEqual(handle.readline(), "DPTH 6 4 0.1 3.0\n")
                self.assertEqual(len(handle.readlines()), 4)
            loaded = read_depth(path)
            np.testing.assert_array_equal(loaded.values, image.values)

            with open(path, "w") as handle:
                handle.write("DPTH 6 5 0.1 3.0\n1 2 3 4 5 6\n")
            self.assertRaises(ValueError, read_depth, path)
            with open(path, "w") as handle:
                handle.write("P2 6 4\n")
            self.assertRaises(ValueError, read_depth, path)


def fake_render():
    return DepthImage(np.full((2, 3), 1.0), 0.1, 3.0)


def scheduled(step, delay, period=5):
    """Render steps of the newest two delivered frames"""
    delivered = [0] + [
        k for k in range(period, step + 1, period) if k + delay <= step
    ]
    return delivered[-1], delivered[-2] if len(delivered) > 1 else 0


class Pipeline(unittest.TestCase):
    def test_initial_fill(self):
        pipeline = DepthPipeline()
        stack = pipeline.reset(fake_render, delay=0)
        self.assertEqual(stack.shape, (2, 2, 3))
        for step in range(5):
            pipeline.observe(step, fake_render)
            self.assertEqual([f.step for f in pipeline.frames], [0, 0])

    def test_schedule(self):
        for delay in range(3):
            pipeline = DepthPipeline()
            pipeline.reset(fake_render, delay=delay)
            for step in range(31):
                pipeline.observe(step, fake_render)
                newest, older = scheduled(step, delay)
                self.assertEqual(pipeline.newest().step, newest)
                self.assertEqual(pipeline.frames[0].step, older)

    def test_delayed_delivery(self):
        pipeline = DepthPipeline()
        pipeline.reset(fake_render, delay=2)
        for step in range(7):
            pipeline.observe(step, fake_render)
        self.assertEqual(pipeline.newest().step, 0)
        pipeline.observe(7, fake_render)
        self.assertEqual(pipeline.newest().step, 5)

    def test_random_delay(self):
        delays = set()
        for seed in range(50):
            pipeline = DepthPipeline()
            pipeline.reset(fake_render, rng=np.random.default_rng(seed))
            delays.add(pipeline.delay)
        self.assertEqual(delays, {0, 1, 2})
        self.assertRaises(
            ValueError, DepthPipeline().reset, fake_render, None, 3
        )

    def test_normalized_stack(self):
        pipeline = DepthPipeline()
        stack = pipeline.reset(fake_render, delay=0)
        np.testing.assert_allclose(stack, (1.0 - 0.1) / 2.9)


if __name__ == "__main__":
    unittest.main()
