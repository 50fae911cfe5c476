from parkour_lab.terrain import (
    GAP,
    SURFACE,
    WALL,
    Family,
    TerrainConfig,
    TerrainSpec,
    difficulty_parameters,
    generate,
    preset_spec,
)
from scipy import ndimage
import numpy as np
import unittest


def stone_statistics(hf, config):
    """Mean stone footprint area and mean forward gap between stones"""
    xs = hf.origin[0] + hf.cell_size * np.arange(hf.rows)
    lo = np.searchsorted(xs, config.start_pad)
    hi = np.searchsorted(xs, hf.extent[1] - config.finish_pad)
    stones = hf.labels[lo:hi] == SURFACE
    components, count = ndimage.label(stones)
    boxes = ndimage.find_objects(components)
    areas = ndimage.sum(stones, components, range(1, count + 1))

    gaps = []
    for box in boxes:
        ahead = [
            other[0].start - box[0].stop
            for other in boxes
            if other[0].start >= box[0].stop
            and other[1].start < box[1].stop
            and box[1].start < other[1].stop
        ]
        if ahead:
            gaps.append(min(ahead))
    cs = hf.cell_size
    return np.mean(areas) * cs * cs, np.mean(gaps) * cs


def centerline(hf):
    return hf.heights[:, hf.cols // 2]


def gap_width(hf):
    """Mean length of the pits crossing the centerline"""
    pit = centerline(hf) < -0.5
    edges = np.diff(pit.astype(int))
    starts, stops = np.nonzero(edges == 1)[0], np.nonzero(edges == -1)[0]
    return np.mean(stops - starts) * hf.cell_size


def wall_inclination(hf):
    """Wall angle in degrees from steps that repeat along a row"""
    steps = np.abs(np.diff(hf.heights, axis=1))
    ramp = np.isclose(steps[:, 1:], steps[:, :-1], rtol=1e-9, atol=0.0)
    ramp &= steps[:, 1:] > 1e-6
    return np.degrees(np.arctan(np.mean(steps[:, 1:][ramp]) / hf.cell_size))


def platform_height(hf):
    """Mean height of the centerline cells raised above the ground"""
    line = centerline(hf)
    return np.mean(line[line > 0.1])


class Methods(unittest.TestCase):
    def test_errors(self):
        self.assertRaises(
            ValueError, generate, TerrainSpec(Family.FLAT, 10, 0)
        )
        self.assertRaises(
            ValueError, generate, TerrainSpec(Family.FLAT, -1, 0)
        )
        self.assertRaises(ValueError, generate, TerrainSpec("Flat", 0, -3))
        self.assertRaises(
            ValueError,
            generate,
            TerrainSpec(Family.FLAT, 0, 0, lane_length=3.0),
        )
        # Too short to host a single gap between the pads
        self.assertRaises(
            ValueError,
            generate,
            TerrainSpec(Family.WALL_ASSISTED_GAP, 9, 0, lane_length=6.0),
        )
        # Too narrow for the wall bands
        self.assertRaises(
            ValueError,
            generate,
            TerrainSpec(Family.SURMOUNTING, 0, 0, lane_width=1.0),
        )

    def test_family_parse(self):
        self.assertEqual(
            Family.parse("steppingstones"), Family.STEPPING_STONES
        )
        self.assertEqual(TerrainSpec("Flat", 0, 1).family, Family.FLAT)
        self.assertRaises(ValueError, Family.parse, "Stairs")

    def test_determinism(self):
        for family in Family:
            spec = TerrainSpec(family, 4, 11)
            a, b = generate(spec), generate(spec)
            np.testing.assert_array_equal(a.heights, b.heights)
            np.testing.assert_array_equal(a.labels, b.labels)

        a = generate(TerrainSpec(Family.STEPPING_STONES, 4, 11))
        b = generate(TerrainSpec(Family.STEPPING_STONES, 4, 12))
        self.assertFalse(np.array_equal(a.heights, b.heights))

    def test_flat(self):
        hf = generate(TerrainSpec(Family.FLAT, 0, 7))
        self.assertLessEqual(np.max(np.abs(hf.heights)), 0.03)
        self.assertEqual((hf.rows, hf.cols), (400, 80))
        self.assertTrue(np.all(hf.labels == SURFACE))

    def test_pads_flat(self):
        config = TerrainConfig()
        for family in Family:
            hf = generate(TerrainSpec(family, 9, 5), config)
            xs = hf.origin[0] + hf.cell_size * np.arange(hf.rows)
            pads = (xs < config.start_pad) | (xs > 20.0 - config.finish_pad)
            # Pads are plain rough ground across the walkable corridor
            corridor = slice(31, 49)
            self.assertLessEqual(
                np.max(np.abs(hf.heights[pads, corridor])), 0.03
            )

    def test_level_parameters(self):
        config = TerrainConfig()
        params = [
            difficulty_parameters(TerrainSpec(Family.FLAT, level, 0), config)
            for level in range(config.levels)
        ]
        for a, b in zip(params, params[1:]):
            self.assertLessEqual(a.gap_width, b.gap_width)
            self.assertLessEqual(a.inclination_deg, b.inclination_deg)
            self.assertLessEqual(a.platform_height, b.platform_height)
            self.assertGreaterEqual(a.stone_size, b.stone_size)
            self.assertLessEqual(a.stone_spacing, b.stone_spacing)
        self.assertAlmostEqual(params[-1].gap_width, 1.2, places=12)
        self.assertAlmostEqual(params[-1].inclination_deg, 80.0, places=12)
        self.assertAlmostEqual(params[-1].platform_height, 0.7, places=12)
        self.assertAlmostEqual(params[-1].stone_size, 0.5, places=12)
        self.assertAlmostEqual(params[0].gap_width, 0.3, places=12)

    def test_difficulty_measured_on_terrain(self):
        config = TerrainConfig()
        seeds = range(50)
        measures = [
            (Family.WALL_ASSISTED_GAP, gap_width),
            (Family.WALL_ASSISTED_GAP, wall_inclination),
            (Family.SURMOUNTING, platform_height),
        ]
        for family, measure in measures:
            means = [
                np.mean(
                    [
                        measure(
                            generate(TerrainSpec(family, level, seed), config)
                        )
                        for seed in seeds
                    ]
                )
                for level in range(config.levels)
            ]
            for a, b in zip(means, means[1:]):
                self.assertLessEqual(a, b, measure.__name__)
            self.assertLess(means[0], means[-1], measure.__name__)
        top = generate(TerrainSpec(Family.WALL_ASSISTED_GAP, 9, 0), config)
        self.assertAlmostEqual(wall_inclination(top), 80.0, places=6)
        width = gap_width(top)
        self.assertAlmostEqual(width, 1.2, delta=config.cell_size * 1.01)
        top = generate(TerrainSpec(Family.SURMOUNTING, 9, 0), config)
        self.assertAlmostEqual(platform_height(top), 0.7, delta=0.01)

    def test_wall_gap_top_level(self):
        cs = 0.05
        hf = generate(TerrainSpec(Family.WALL_ASSISTED_GAP, 9, 2))
        center = hf.labels[:, 40]
        self.assertTrue(np.any(center == GAP))

        # Every pit along the centerline spans the configured maximum
        runs, run = [], 0
        for label in center:
            if label == GAP:
                run += 1
            elif run:
                runs.append(run)
                run = 0
        for run in runs:
            self.assertLessEqual(abs(run * cs - 1.2), cs + 1e-9)

        # Wall bands are smooth ramps at the configured inclination
        slope = np.tan(np.radians(80.0))
        rows = np.nonzero(np.any(hf.labels == WALL, axis=1))[0]
        self.assertGreater(len(rows), 0)
        for i in rows[::7]:
            js = np.nonzero(hf.labels[i] == WALL)[0]
            steps = np.abs(np.diff(hf.heights[i, js]))
            np.testing.assert_allclose(steps, cs * slope, rtol=1e-9)

    def test_inclination_presets(self):
        steep = generate(preset_spec("wall_gap_80", 0))
        shallow = generate(preset_spec("wall_gap_60", 0))
        self.assertGreater(
            steep.heights[steep.labels == WALL].max(),
            shallow.heights[shallow.labels == WALL].max(),
        )
        spec = preset_spec("wall_gap_60", 4)
        self.assertEqual(spec.level, 9)
        self.assertEqual(spec.gap_width, 1.2)
        self.assertEqual(preset_spec("stepping_stones_l2", 0).level, 2)
        self.assertRaises(ValueError, preset_spec, "moon", 0)

    def test_surmounting(self):
        hf = generate(TerrainSpec(Family.SURMOUNTING, 9, 3))
        center = hf.heights[:, 40]
        tops = center[center > 0.5]
        self.assertGreater(len(tops), 0)
        self.assertLessEqual(np.max(np.abs(tops - 0.7)), 0.03 + 1e-12)
        self.assertTrue(np.any(hf.labels == WALL))

    def test_stepping_stones_curriculum(self):
        config = TerrainConfig()
        seeds = range(50)
        stats = []
        for level in range(config.levels):
            values = [
                stone_statistics(
                    generate(
                        TerrainSpec(Family.STEPPING_STONES, level, seed),
                        config,
                    ),
                    config,
                )
                for seed in seeds
            ]
            stats.append(np.mean(values, axis=0))
        for (area_a, gap_a), (area_b, gap_b) in zip(stats, stats[1:]):
            self.assertGreaterEqual(area_a, area_b)
            self.assertLessEqual(gap_a, gap_b)


if __name__ == "__main__":
    unittest.main()
