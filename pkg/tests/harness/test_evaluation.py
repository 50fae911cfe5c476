from parkour_lab.harness import (
    EvalReport,
    ablation_frame,
    ablation_run,
    build_agent,
    evaluate,
    regression_errors,
    reports_frame,
    summarize,
)
from parkour_lab.rl import EpisodeRecord
from tests.harness.test_training import tiny_config
from dataclasses import asdict
import numpy as np
import os
import tempfile
import unittest


def episodes(outcome, progress, count=4):
    return [
        EpisodeRecord(i, outcome, progress, 20, 0) for i in range(count)
    ]


class Methods(unittest.TestCase):
    def test_always_finishing_policy(self):
        report = summarize("flat", episodes("finished", 1.0))
        self.assertEqual(report.success_rate, 1.0)
        self.assertEqual(report.traverse_rate, 1.0)
        self.assertEqual(report.trials, 4)
        self.assertEqual(report.mean_length, 20.0)

    def test_stopping_halfway(self):
        report = summarize("flat", episodes("timeout", 0.5))
        self.assertEqual(report.success_rate, 0.0)
        self.assertAlmostEqual(report.traverse_rate, 0.5)

    def test_mixed_outcomes(self):
        records = episodes("finished", 1.0, 1) + episodes("fell", 0.2, 3)
        report = summarize("flat", records, rewards=[[1, 2, 3], [3, 4, 5]])
        self.assertAlmostEqual(report.success_rate, 0.25)
        self.assertAlmostEqual(report.traverse_rate, 0.4)
        self.assertEqual(
            (report.reward_task, report.reward_foothold, report.reward_style),
            (2.0, 3.0, 4.0),
        )
        self.assertIn("SR 0.250", str(report))
        with self.assertRaises(ValueError):
            summarize("flat", [])

    def test_standing_at_the_lane_midpoint(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = tiny_config(tmp).replace(
                episode={"start_x": 4.0, "max_steps": 1}
            )
            report = evaluate(build_agent(config), config, "flat", trials=2)
        self.assertEqual(report.success_rate, 0.0)
        self.assertEqual(report.mean_length, 1.0)
        self.assertAlmostEqual(report.traverse_rate, 0.5, delta=0.01)

    def test_regression_errors(self):
        targets = np.array([[0.0, 1.0], [2.0, 1.0], [4.0, 1.0]])
        self.assertEqual(regression_errors(targets, targets), (0.0, 0.0))
        mse, normalized = regression_errors(targets + 1.0, targets)
        self.assertAlmostEqual(mse, 1.0)
        # Only the varying first component is normalized
        self.assertAlmostEqual(normalized, 1.0 / np.var([0.0, 2.0, 4.0]))
        mse, normalized = regression_errors(
            np.zeros((2, 2)), np.ones((2, 2))
        )
        self.assertEqual(mse, 1.0)
        self.assertTrue(np.isnan(normalized))
        self.assertTrue(all(np.isnan(regression_errors([], []))))
        with self.assertRaises(ValueError):
            regression_errors(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_report_validation(self):
        with self.assertRaises(ValueError):
            EvalReport("flat", 0, 0.0, 0.0, 0.0, 0.0, 0.0)
        with self.assertRaises(ValueError):
            EvalReport("flat", 1, 1.5, 0.0, 0.0, 0.0, 0.0)
        with self.assertRaises(ValueError):
            EvalReport("flat", 1, 0.5, -0.1, 0.0, 0.0, 0.0)

    def test_evaluation_is_reproducible(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = tiny_config(tmp)
            agent = build_agent(config)
            first = evaluate(agent, config, "flat", trials=3, seed=5)
            again = evaluate(
                agent, config, "flat", trials=3, seed=5, batch_size=2
            )
            threaded = evaluate(
                agent, config, "flat", trials=3, seed=5, threads=2
            )
        self.assertEqual(first.trials, 3)
        self.assertTrue(0.0 <= first.success_rate <= 1.0)
        self.assertTrue(0.0 <= first.traverse_rate <= 1.0)
        self.assertTrue(np.isfinite(first.mse))
        self.assertLessEqual(first.mean_length, 4)
        self.assertEqual(len(first.config_digest), 64)
        np.testing.assert_equal(asdict(threaded), asdict(first))
        self.assertEqual(again.success_rate, first.success_rate)
        self.assertEqual(again.traverse_rate, first.traverse_rate)

    def test_evaluation_writes_trajectories(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = tiny_config(tmp)
            agent = build_agent(config)
            dump = os.path.join(tmp, "traj")
            report = evaluate(
                agent, config, "flat", trials=2, dump_traj=dump
            )
            self.assertEqual(
                sorted(os.listdir(dump)), ["flat_0000.csv", "flat_0001.csv"]
            )
            frame = reports_frame([report, report])
        self.assertEqual(len(frame), 2)
        self.assertIn("success_rate", frame.columns)
        with self.assertRaises(ValueError):
            evaluate(agent, config, "flat", trials=0)
        with self.assertRaises(ValueError):
            evaluate(agent, config, "nowhere", trials=1)

    def test_ablation_pairs_baseline_and_variant(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = tiny_config(tmp, iterations=1)
            results = ablation_run(
                config,
                "no_prior",
                presets=("flat",),
                seeds=(0,),
                trials=2,
                verbose=False,
            )
            self.assertTrue(
                os.path.exists(
                    os.path.join(tmp, "no_prior", "seed_0", "metrics.csv")
                )
            )
        self.assertEqual(list(results), ["full", "no_prior"])
        frame = ablation_frame(results)
        self.assertEqual(list(frame["variant"]), ["full", "no_prior"])
        self.assertEqual(list(frame["seed"]), [0, 0])
        self.assertEqual(list(frame["trials"]), [2, 2])


if __name__ == "__main__":
    unittest.main()
