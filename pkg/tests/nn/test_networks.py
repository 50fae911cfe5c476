from parkour_lab.nn import (
    REWARD_GROUPS,
    Agent,
    MLP,
    NetworkConfig,
    check_module,
    precision,
)
from parkour_lab.nn.networks import LOG_2PI
from dataclasses import replace
import numpy as np
import unittest

SMALL = NetworkConfig(
    proprio_history=3,
    depth_shape=(8, 12),
    conv_channels=(3, 4),
    token_dim=8,
    attention_heads=2,
    gru_hidden=6,
    policy_hidden=(16, 16),
    critic_hidden=(16,),
    head_hidden=(8,),
)


def inputs(config, batch=4, seed=0):
    rng = np.random.default_rng(seed)
    history = rng.normal(size=(batch, config.proprio_history, 45))
    depth = rng.uniform(
        size=(batch, config.depth_history) + tuple(config.depth_shape)
    )
    return history, depth


class Methods(unittest.TestCase):
    def test_output_shapes(self):
        agent = Agent(SMALL, seed=1)
        history, depth = inputs(SMALL)
        prior, velocity, latent = agent.estimator(history, depth)
        self.assertEqual(prior.shape, (4, 4))
        self.assertEqual(velocity.shape, (4, 3))
        self.assertEqual(latent.shape, (4, 64))
        self.assertEqual(agent.decoder(latent).shape, (4, 77))
        mean = agent.policy(np.zeros((4, 45)), prior, velocity, latent)
        self.assertEqual(mean.shape, (4, 12))
        self.assertEqual(agent.policy.input_size, 45 + 4 + 3 + 64)
        for group in REWARD_GROUPS:
            value = agent.critics[group](
                np.zeros((4, 60)), np.zeros((4, 77)), np.zeros((4, 4))
            )
            self.assertEqual(value.shape, (4,))

    def test_zero_heads(self):
        config = replace(SMALL, zero_heads=True)
        agent = Agent(config, seed=2)
        for outputs in agent.estimator(*inputs(config, seed=3)):
            np.testing.assert_array_equal(outputs.data, 0.0)

    def test_estimator_shape_errors(self):
        agent = Agent(SMALL)
        history, depth = inputs(SMALL)
        self.assertRaises(
            ValueError, agent.estimator, history[:, :2], depth
        )
        self.assertRaises(
            ValueError, agent.estimator, history, depth[:, :, :4]
        )
        self.assertRaises(ValueError, agent.decoder, np.zeros((2, 5)))

    def test_gradients_reach_the_conv_stack(self):
        agent = Agent(SMALL, seed=4)
        history, depth = inputs(SMALL, seed=5)
        first_conv = agent.estimator.depth.convs[0].weight
        for head in range(3):
            with self.subTest(head=head):
                agent.zero_grad()
                outputs = agent.estimator(history, depth)
                (outputs[head] * outputs[head]).sum().backward()
                self.assertIsNotNone(first_conv.grad)
                self.assertGreater(np.abs(first_conv.grad).sum(), 0.0)

    def test_estimator_gradcheck(self):
        config = replace(SMALL, latent_dim=5)
        history, depth = inputs(config, batch=2, seed=6)
        weights = np.random.default_rng(7).normal(size=(2, 12))
        with precision(np.float64):
            agent = Agent(config, seed=8)

            def loss():
                prior, velocity, latent = agent.estimator(history, depth)
                return (prior.sum(-1) + velocity.sum(-1)).sum() + (
                    latent * weights[:, :5]
                ).sum()

            error = check_module(agent.estimator, loss, limit=4)
        self.assertLess(error, 1e-6)

    def test_policy_and_critic_gradcheck(self):
        rng = np.random.default_rng(9)
        obs = rng.normal(size=(3, 45))
        prior, velocity = rng.normal(size=(3, 4)), rng.normal(size=(3, 3))
        latent = rng.normal(size=(3, 64))
        actions = rng.normal(size=(3, 12))
        privileged, heights = rng.normal(size=(3, 60)), rng.normal(
            size=(3, 77)
        )
        with precision(np.float64):
            agent = Agent(SMALL, seed=10)
            policy, critic = agent.policy, agent.critics["task"]

            def policy_loss():
                mean = policy(obs, prior, velocity, latent)
                return policy.log_prob(mean, actions).sum()

            def critic_loss():
                value = critic(privileged, heights, prior)
                return (value * value).sum()

            self.assertLess(
                check_module(policy, policy_loss, limit=6), 1e-6
            )
            self.assertLess(
                check_module(critic, critic_loss, limit=6), 1e-6
            )

    def test_log_prob_closed_form(self):
        rng = np.random.default_rng(11)
        with precision(np.float64):
            agent = Agent(SMALL, seed=12)
            policy = agent.policy
            policy.log_std.data = rng.normal(size=12) * 0.3
            mean = rng.normal(size=(5, 12))
            actions = rng.normal(size=(5, 12))
            got = policy.log_prob(mean, actions).data
            entropy = policy.entropy().item()
        std = np.exp(policy.log_std.data)
        expected = np.sum(
            -0.5 * ((actions - mean) / std) ** 2
            - np.log(std)
            - 0.5 * np.log(2 * np.pi),
            axis=-1,
        )
        np.testing.assert_allclose(got, expected, atol=1e-10)
        self.assertAlmostEqual(
            entropy, np.sum(np.log(std) + 0.5 * (1 + LOG_2PI)), places=10
        )

    def test_deterministic_action_is_the_mean(self):
        agent = Agent(SMALL)
        mean = np.arange(12.0).reshape(1, 12)
        rng = np.random.default_rng(0)
        np.testing.assert_array_equal(
            agent.policy.sample(mean, rng, deterministic=True), mean
        )
        draws = np.stack(
            [agent.policy.sample(mean, rng) for _ in range(2000)]
        )
        np.testing.assert_allclose(draws.std(axis=0), 0.5, rtol=0.1)

    def test_no_prior_input(self):
        config = replace(SMALL, prior_size=0)
        agent = Agent(config)
        self.assertEqual(agent.policy.input_size, 45 + 3 + 64)
        mean = agent.policy(
            np.zeros((2, 45)), None, np.zeros((2, 3)), np.zeros((2, 64))
        )
        self.assertEqual(mean.shape, (2, 12))

    def test_critics_are_independent(self):
        agent = Agent(SMALL, seed=13)
        rng = np.random.default_rng(14)
        args = (
            rng.normal(size=(2, 60)),
            rng.normal(size=(2, 77)),
            rng.normal(size=(2, 4)),
        )
        before = {g: c(*args).data.copy() for g, c in agent.critics.items()}
        for p in agent.critics["foothold"].parameters():
            p.data = p.data + 0.1
        after = {g: c(*args).data for g, c in agent.critics.items()}
        np.testing.assert_array_equal(after["task"], before["task"])
        np.testing.assert_array_equal(after["style"], before["style"])
        self.assertFalse(np.allclose(after["foothold"], before["foothold"]))

    def test_parameter_namespaces(self):
        agent = Agent(SMALL, prior_decoder_size=6)
        names = [name for name, _ in agent.named_parameters()]
        self.assertEqual(len(names), len(set(names)))
        ids = [id(p) for p in agent.parameters()]
        self.assertEqual(len(ids), len(set(ids)))
        roots = {name.split(".")[0] for name in names}
        self.assertEqual(
            roots,
            {"estimator", "decoder", "prior_decoder", "policy", "critics"},
        )
        critic_names = {
            g: {n for n in names if n.startswith("critics.{}.".format(g))}
            for g in REWARD_GROUPS
        }
        self.assertTrue(all(critic_names.values()))
        self.assertFalse(critic_names["task"] & critic_names["style"])
        estimator_ids = {id(p) for p in agent.estimator_parameters()}
        policy_ids = {id(p) for p in agent.policy.parameters()}
        self.assertFalse(estimator_ids & policy_ids)
        self.assertIsInstance(agent.prior_decoder, MLP)
        self.assertIn("policy.log_std", names)

    def test_state_dict_checks(self):
        agent = Agent(SMALL, seed=15)
        other = Agent(SMALL, seed=16)
        state = agent.state_dict()
        other.load_state_dict(state)
        for (_, a), (_, b) in zip(
            agent.named_parameters(), other.named_parameters()
        ):
            np.testing.assert_array_equal(a.data, b.data)
        missing = dict(state)
        missing.pop("policy.log_std")
        with self.assertRaises(RuntimeError) as caught:
            other.load_state_dict(missing)
        self.assertIn("policy.log_std", str(caught.exception))
        extra = dict(state, bogus=np.zeros(1))
        self.assertRaises(RuntimeError, other.load_state_dict, extra)
        wrong = dict(state)
        wrong["policy.log_std"] = np.zeros(3)
        self.assertRaises(RuntimeError, other.load_state_dict, wrong)


if __name__ == "__main__":
    unittest.main()
