from parkour_lab.nn import (
    Adam,
    Agent,
    NetworkConfig,
    Tensor,
    clip_grad_norm,
    no_grad,
    read_checkpoint,
    write_checkpoint,
)
import numpy as np
import os
import struct
import tempfile
import unittest

SMALL = NetworkConfig(
    proprio_history=2,
    depth_shape=(8, 8),
    conv_channels=(2,),
    token_dim=4,
    attention_heads=1,
    gru_hidden=4,
    latent_dim=3,
    policy_hidden=(8,),
    critic_hidden=(8,),
    head_hidden=(4,),
)


class Methods(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "agent.puma")

    def tearDown(self):
        self.tmp.cleanup()

    def test_adam_first_step(self):
        x = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
        optimizer = Adam([x], lr=0.1)
        (x * x).sum().backward()
        optimizer.step()
        # The bias-corrected first step moves every coordinate by lr
        np.testing.assert_allclose(
            x.data, [0.9, -1.9, 2.9], rtol=1e-5
        )
        self.assertEqual(optimizer.steps, 1)

    def test_adam_minimizes(self):
        x = Tensor(np.array([3.0, -4.0]), requires_grad=True)
        optimizer = Adam([x], lr=0.05)
        for _ in range(500):
            optimizer.zero_grad()
            ((x - 1.0) * (x - 1.0)).sum().backward()
            optimizer.step()
        np.testing.assert_allclose(x.data, 1.0, atol=1e-2)

    def test_adam_rejects_shared_parameters(self):
        x = Tensor(np.zeros(2), requires_grad=True)
        self.assertRaises(ValueError, Adam, [x, x])

    def test_adam_resume(self):
        def run(optimizer, x, steps):
            for _ in range(steps):
                optimizer.zero_grad()
                (x * x * x).sum().backward()
                optimizer.step()

        start = np.array([0.5, -1.5, 2.0])
        a = Tensor(start, requires_grad=True)
        full = Adam([a], lr=0.01)
        run(full, a, 10)

        b = Tensor(start, requires_grad=True)
        first = Adam([b], lr=0.01)
        run(first, b, 4)
        c = Tensor(b.data.copy(), requires_grad=True)
        second = Adam([c], lr=0.01)
        second.load_state_dict(first.state_dict())
        run(second, c, 6)
        np.testing.assert_array_equal(a.data, c.data)

        other = Adam([a, b], lr=0.01)
        self.assertRaises(
            RuntimeError, other.load_state_dict, first.state_dict()
        )

    def test_clip_grad_norm(self):
        a = Tensor(np.zeros(2), requires_grad=True)
        b = Tensor(np.zeros(1), requires_grad=True)
        a.grad = np.array([3.0, 0.0])
        b.grad = np.array([4.0])
        self.assertAlmostEqual(clip_grad_norm([a, b], 1.0), 5.0)
        total = np.sqrt(np.sum(a.grad**2) + np.sum(b.grad**2))
        self.assertAlmostEqual(total, 1.0, places=6)
        np.testing.assert_allclose(a.grad, [0.6, 0.0], rtol=1e-6)
        self.assertAlmostEqual(clip_grad_norm([a, b], 10.0), 1.0, places=6)
        np.testing.assert_allclose(b.grad, [0.8], rtol=1e-6)

    def test_checkpoint_round_trip(self):
        agent = Agent(SMALL, seed=3)
        write_checkpoint(agent.state_dict(), self.path)
        with open(self.path, "rb") as handle:
            head = handle.read(13)
        self.assertEqual(head[:5], b"PUMA1")
        version, count = struct.unpack("<II", head[5:])
        self.assertEqual(version, 1)
        self.assertEqual(count, len(agent.state_dict()))

        tensors = read_checkpoint(self.path)
        self.assertEqual(list(tensors), list(agent.state_dict()))
        restored = Agent(SMALL, seed=4)
        restored.load_state_dict(tensors)
        for (name, a), (_, b) in zip(
            agent.named_parameters(), restored.named_parameters()
        ):
            with self.subTest(name=name):
                np.testing.assert_array_equal(a.data, b.data)

        rng = np.random.default_rng(5)
        history = rng.normal(size=(2, 2, 45))
        depth = rng.uniform(size=(2, 2, 8, 8))
        with no_grad():
            for x, y in zip(
                agent.estimator(history, depth),
                restored.estimator(history, depth),
            ):
                np.testing.assert_array_equal(x.data, y.data)

    def test_checkpoint_layout(self):
        tensors = {"w": np.arange(6.0).reshape(2, 3), "scalar": np.float32(2)}
        write_checkpoint(tensors, self.path)
        with open(self.path, "rb") as handle:
            data = handle.read()
        (length,) = struct.unpack_from("<I", data, 13)
        self.assertEqual(data[17 : 17 + length], b"w")
        rank, rows, cols = struct.unpack_from("<IQQ", data, 17 + length)
        self.assertEqual((rank, rows, cols), (2, 2, 3))
        values = np.frombuffer(data, "<f4", 6, 17 + length + 20)
        np.testing.assert_array_equal(values, np.arange(6.0))
        back = read_checkpoint(self.path)
        self.assertEqual(back["scalar"].shape, ())
        self.assertEqual(back["w"].dtype, np.float32)

    def test_checkpoint_errors(self):
        write_checkpoint({"w": np.ones(4)}, self.path)
        with open(self.path, "rb") as handle:
            data = handle.read()

        with open(self.path, "wb") as handle:
            handle.write(b"PUMA2" + data[5:])
        self.assertRaises(ValueError, read_checkpoint, self.path)

        with open(self.path, "wb") as handle:
            handle.write(data[:5] + struct.pack("<I", 2) + data[9:])
        with self.assertRaises(RuntimeError) as caught:
            read_checkpoint(self.path)
        self.assertIn("version 2", str(caught.exception))

        with open(self.path, "wb") as handle:
            handle.write(data[:-3])
        self.assertRaises(ValueError, read_checkpoint, self.path)


if __name__ == "__main__":
    unittest.main()
