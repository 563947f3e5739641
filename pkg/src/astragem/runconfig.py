"""Flat run configuration: defaults, TOML file, command-line overrides.

Precedence is command-line flag > config file > built-in default. The key
set is flat so an experiment file reads as a plain list of knobs:

    seed = 7
    data = "runs/community/train.json"
    iterations = 2000
    sigmas = [1.0, 0.5, 0.25, 0.1]

Unknown keys are rejected (typos should fail loudly, not train wrong).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

from astragem.errors import FormatError
from astragem.nets import EdpgnnConfig
from astragem.sampling import LangevinConfig
from astragem.stein.noise import NoiseLadder
from astragem.stein.training import TrainConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULTS = {
    "seed": 0,
    "data": None,
    # architecture
    "channels": 2,
    "msg_steps": 3,
    "node_dim": 16,
    "hidden": 32,
    "activation": "elu",
    "eps_mode": "learnable",
    "eps_value": 0.0,
    "message_scale": "inverse-n",
    # noise ladder
    "sigmas": [1.0, 0.5, 0.25, 0.1],
    # training
    "iterations": 2000,
    "batch_size": 16,
    "critic_steps": 5,
    "lambda_kde": 0.1,
    "lambda_l2": 1e-3,
    "critic_lr": 1e-3,
    "generator_lr": 1e-4,
    "optimizer": "adam",
    "trace_mode": "hutchinson",
    "trace_probes": 1,
    "batch_grouping": "same-size",
    "checkpoint_every": 200,
    # langevin sampling
    "langevin_steps": 1000,
    "eta_start": 1e-2,
    "eta_end": 1e-4,
    "threshold": 0.5,
}


@dataclass(frozen=True)
class RunConfig:
    """Validated bundle of every knob a run needs."""

    fields: dict
    model: EdpgnnConfig
    ladder: NoiseLadder
    training: TrainConfig
    langevin: LangevinConfig

    @property
    def seed(self) -> int:
        return self.fields["seed"]

    @property
    def data(self):
        return self.fields["data"]


def _build(fields: dict) -> RunConfig:
    model = EdpgnnConfig(
        channels=fields["channels"],
        msg_steps=fields["msg_steps"],
        node_dim=fields["node_dim"],
        hidden=fields["hidden"],
        activation=fields["activation"],
        eps_mode=fields["eps_mode"],
        eps_value=fields["eps_value"],
        message_scale=fields["message_scale"],
    )
    ladder = NoiseLadder(tuple(fields["sigmas"]))
    training = TrainConfig(
        iterations=fields["iterations"],
        batch_size=fields["batch_size"],
        critic_steps=fields["critic_steps"],
        lambda_kde=fields["lambda_kde"],
        lambda_l2=fields["lambda_l2"],
        critic_lr=fields["critic_lr"],
        generator_lr=fields["generator_lr"],
        optimizer=fields["optimizer"],
        trace_mode=fields["trace_mode"],
        trace_probes=fields["trace_probes"],
        batch_grouping=fields["batch_grouping"],
        seed=fields["seed"],
        checkpoint_every=fields["checkpoint_every"],
    )
    langevin = LangevinConfig(
        steps=fields["langevin_steps"],
        eta_start=fields["eta_start"],
        eta_end=fields["eta_end"],
        threshold=fields["threshold"],
    )
    return RunConfig(fields, model, ladder, training, langevin)


def load_run_config(config_path=None, overrides=None) -> RunConfig:
    """Merge defaults, an optional TOML file and explicit overrides."""
    fields = dict(DEFAULTS)
    if config_path is not None:
        try:
            with open(config_path, "rb") as fh:
                file_fields = tomllib.load(fh)
        except OSError as err:
            raise FormatError(f"cannot read config {config_path}: {err}") from None
        except tomllib.TOMLDecodeError as err:
            raise FormatError(f"config {config_path} is not valid TOML: {err}") from None
        unknown = sorted(set(file_fields) - set(DEFAULTS))
        if unknown:
            raise FormatError(f"config {config_path} has unknown keys: {', '.join(unknown)}")
        fields.update(file_fields)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in DEFAULTS:
            raise FormatError(f"unknown config override '{key}'")
        fields[key] = value
    try:
        return _build(fields)
    except (ValueError, TypeError) as err:
        raise FormatError(f"invalid configuration: {err}") from None


def from_checkpoint_fields(fields: dict) -> RunConfig:
    """Rebuild a RunConfig from the flat dict stored in a checkpoint header."""
    merged = dict(DEFAULTS)
    merged.update(fields)
    return _build(merged)
