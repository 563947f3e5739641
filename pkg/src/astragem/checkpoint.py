"""Checkpoint file format.

One file: a UTF-8 JSON header line (terminated by a newline) followed by raw
little-endian float64 buffers. The header carries

    {"format_version": 1,
     "config":   {... architecture / training / noise / langevin ...},
     "manifest": {"energy/embed/w": {"shape": [1, 16], "offset": 0}, ...},
     ... run bookkeeping: kind, iteration, rng_state, sizes ...}

with offsets relative to the start of the binary section and buffers stored
in manifest (insertion) order. Loaders reject unknown format versions.
"""

from __future__ import annotations

import json

import numpy as np

from astragem.errors import FormatError

CHECKPOINT_FORMAT_VERSION = 1


def save_tensors(path, tensors: dict[str, np.ndarray], header_fields: dict):
    manifest = {}
    offset = 0
    for name, arr in tensors.items():
        size = int(np.prod(arr.shape, dtype=np.int64)) * 8
        manifest[name] = {"shape": list(arr.shape), "offset": offset}
        offset += size
    header = {"format_version": CHECKPOINT_FORMAT_VERSION, **header_fields, "manifest": manifest}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for arr in tensors.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_tensors(path):
    """Returns (tensors, header). Validates version, shapes and byte counts."""
    try:
        with open(path, "rb") as fh:
            header_line = fh.readline()
            blob = fh.read()
    except OSError as err:
        raise FormatError(f"cannot read checkpoint {path}: {err}") from None
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise FormatError(f"checkpoint {path} has a malformed header: {err}") from None
    version = header.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise FormatError(
            f"checkpoint {path} has format_version {version!r}, expected {CHECKPOINT_FORMAT_VERSION}"
        )
    tensors = {}
    for name, entry in header.get("manifest", {}).items():
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        start = entry["offset"]
        end = start + count * 8
        if end > len(blob):
            raise FormatError(f"checkpoint {path}: tensor '{name}' extends past end of file")
        tensors[name] = np.frombuffer(blob[start:end], dtype="<f8").reshape(shape).copy()
    return tensors, header


def _flatten_state(state):
    """TrainState -> (tensors dict, bookkeeping dict)."""
    tensors = {}
    for name, arr in state.theta.items():
        tensors[f"energy/{name}"] = np.asarray(arr, dtype=np.float64)
    for name, arr in state.psi.items():
        tensors[f"critic/{name}"] = np.asarray(arr, dtype=np.float64)
    opt_meta = {}
    for prefix, opt in (("opt_energy", state.opt_theta), ("opt_critic", state.opt_psi)):
        sd = opt.state_dict()
        opt_meta[prefix] = {"t": sd["t"]}
        for name, arr in sd["m"].items():
            tensors[f"{prefix}/m/{name}"] = arr
        for name, arr in sd["v"].items():
            tensors[f"{prefix}/v/{name}"] = arr
    book = {
        "iteration": state.iteration,
        "optimizer_steps": opt_meta,
        "rng_state": state.rng.bit_generator.state,
    }
    return tensors, book


def save_train_state(path, state, config_fields: dict, sizes: list[int]):
    """Write a resumable training checkpoint.

    ``config_fields`` is the flat run configuration (architecture, training,
    noise, langevin); ``sizes`` is the training-set node-count list the
    sampler needs.
    """
    tensors, book = _flatten_state(state)
    save_tensors(
        path,
        tensors,
        {"kind": "train-state", "config": config_fields, "sizes": sizes, **book},
    )


def load_train_state(path):
    """Read a checkpoint; returns (groups, header) with namespaced tensors split out."""
    tensors, header = load_tensors(path)
    groups = {"energy": {}, "critic": {}, "opt_energy/m": {}, "opt_energy/v": {},
              "opt_critic/m": {}, "opt_critic/v": {}}
    for name, arr in tensors.items():
        for prefix in groups:
            if name.startswith(prefix + "/"):
                groups[prefix][name[len(prefix) + 1 :]] = arr
                break
        else:
            raise FormatError(f"checkpoint {path}: unexpected tensor '{name}'")
    return groups, header
