"""Closed-loop Monte Carlo evaluation of a direct-control policy.

The policy executes, at every belief, the action tag of the alpha vector that
maximizes the lower bound there. Episodes are independently seeded from
(seed, episode index), so results do not depend on execution order and
episodes can run in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ZeroProbabilityObservation
from .model import belief_update

CI95_FACTOR = 1.96
MAX_EPISODE_RETRIES = 64


@dataclass
class EvalConfig:
    num_episodes: int = 500
    horizon: int = 251
    seed: int = 0
    discounted: bool = True

    def __post_init__(self):
        if self.num_episodes < 1 or self.horizon < 1:
            raise ValueError("need num_episodes >= 1 and horizon >= 1")


@dataclass
class EvalResult:
    """Mean return with a 95% normal confidence interval.

    stderr_defined is False for a single episode, where the sample standard
    error does not exist; both stderr and the half-width are then reported
    as 0. truncation_bound caps how much return the horizon cutoff can hide
    (discount^horizon * max |R| / (1 - discount)); it is infinite in
    undiscounted mode. aborted_episodes counts restarts caused by numerically
    impossible observations, which indicate an inconsistent model.
    """

    mean: float
    stderr: float
    ci95_half_width: float
    returns: np.ndarray
    stderr_defined: bool
    truncation_bound: float
    aborted_episodes: int


def policy_action(lb, b):
    """Action tag of the vector maximizing the lower bound at b (lowest
    vector index wins ties)."""
    return int(lb.actions[lb.best_index(b)])


def _sample(rng, cumulative):
    return int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))


def _run_episode(model, lb, config, rng, absorbing):
    gamma = model.discount
    b = model.initial_belief
    state = int(b.states[_sample(rng, np.cumsum(b.probs))])
    total = 0.0
    weight = 1.0
    for _ in range(config.horizon):
        if absorbing[state]:
            break
        action = policy_action(lb, b)
        total += weight * model.reward[action, state]
        if config.discounted:
            weight *= gamma
        row = model.transition[action][[state]]
        state = int(row.indices[_sample(rng, np.cumsum(row.data))])
        obs = _sample(rng, np.cumsum(model.observation[action, state]))
        b = belief_update(model, b, action, obs)
    return total


def simulate_episode(model, lb, config, episode_seed):
    """Discounted return of one episode, fully determined by (model, lb, seed).

    Raises ZeroProbabilityObservation on numerical belief collapse; evaluate()
    handles retries.
    """
    rng = np.random.default_rng(episode_seed)
    return _run_episode(model, lb, config, rng, model.absorbing_zero_reward_states())


def _run_episode_range(model, lb, config, first, count):
    absorbing = model.absorbing_zero_reward_states()
    returns = np.empty(count)
    aborted = 0
    for offset in range(count):
        episode = first + offset
        for retry in range(MAX_EPISODE_RETRIES):
            rng = np.random.default_rng([config.seed, episode, retry])
            try:
                returns[offset] = _run_episode(model, lb, config, rng, absorbing)
                break
            except ZeroProbabilityObservation:
                aborted += 1
        else:
            raise ZeroProbabilityObservation(
                f"episode {episode} kept collapsing after {MAX_EPISODE_RETRIES} retries")
    return returns, aborted


def _episode_batch(payload):
    return _run_episode_range(*payload)


def evaluate(model, lb, config, jobs=1):
    """Run config.num_episodes independent episodes and summarize.

    Episode streams depend only on (seed, episode index), so jobs > 1 splits
    the episodes across processes without changing any result.
    """
    if jobs > 1 and config.num_episodes > 1:
        from concurrent.futures import ProcessPoolExecutor

        jobs = min(jobs, config.num_episodes)
        bounds = np.linspace(0, config.num_episodes, jobs + 1).astype(int)
        payloads = [(model, lb, config, int(lo), int(hi - lo))
                    for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_episode_batch, payloads))
        returns = np.concatenate([p[0] for p in parts])
        aborted = sum(p[1] for p in parts)
    else:
        returns, aborted = _run_episode_range(model, lb, config, 0, config.num_episodes)

    mean = float(returns.mean())
    if config.num_episodes > 1:
        stderr = float(returns.std(ddof=1) / np.sqrt(config.num_episodes))
        defined = True
    else:
        stderr = 0.0
        defined = False
    if config.discounted:
        gamma = model.discount
        truncation = float(gamma ** config.horizon * np.abs(model.reward).max()
                           / (1.0 - gamma))
    else:
        truncation = float("inf")
    return EvalResult(
        mean=mean,
        stderr=stderr,
        ci95_half_width=CI95_FACTOR * stderr,
        returns=returns,
        stderr_defined=defined,
        truncation_bound=truncation,
        aborted_episodes=aborted,
    )
