"""Adversarial Stein training: noise ladder, KDE regularizer, discrepancy, loop."""

from astragem.stein.discrepancy import discrepancy, stein_term
from astragem.stein.kde import kde_score
from astragem.stein.noise import NoiseLadder, NoisyAdjacency, perturb
from astragem.stein.training import (
    Adam,
    GraphProblem,
    TrainConfig,
    TrainState,
    critic_step,
    generator_step,
    train,
)

__all__ = [
    "Adam",
    "GraphProblem",
    "NoiseLadder",
    "NoisyAdjacency",
    "TrainConfig",
    "TrainState",
    "critic_step",
    "discrepancy",
    "generator_step",
    "kde_score",
    "perturb",
    "stein_term",
    "train",
]
