"""Versioned model documents: JSON with stable key order, bit-exact round trip.

Floats are emitted through Python's repr (shortest exact representation), so
save -> load -> save reproduces the file byte for byte; training with the
same seed reproduces it too.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .coxnet import FittedModel, NetworkWeights, TrainConfig
from .encoding import codebook_from_dict, codebook_to_dict
from .survival import BaselineHazard

FORMAT_NAME = "claimdur-model"
FORMAT_VERSION = 1


def model_to_dict(model: FittedModel) -> dict:
    return {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "weights": {
            "n_inputs": model.weights.n_inputs,
            "n_hidden": model.weights.n_hidden,
            "w_in_hidden": model.weights.w_in_hidden.tolist(),
            "w_hidden_out": model.weights.w_hidden_out.tolist(),
            "w_in_out": model.weights.w_in_out.tolist(),
        },
        "baseline": {
            "times": model.baseline.times.tolist(),
            "cumulative_hazard": model.baseline.cumulative_hazard.tolist(),
        },
        "codebook": codebook_to_dict(model.codebook),
        "config": {
            "decay": model.config.decay,
            "bias_decay": model.config.bias_decay,
            "n_hidden": model.config.n_hidden,
            "max_iterations": model.config.max_iterations,
            "tolerance": model.config.tolerance,
            "gradient_tolerance": model.config.gradient_tolerance,
            "init_scale": model.config.init_scale,
            "seed": model.config.seed,
        },
        "final_objective": model.final_objective,
        "train_loglik": model.train_loglik,
        "stopped_by": model.stopped_by,
        "iterations": model.iterations,
        "training_index": {
            "etas": model.train_etas.tolist(),
            "categories": model.train_categories.tolist(),
        },
    }


def model_from_dict(doc: dict) -> FittedModel:
    if doc.get("format") != FORMAT_NAME:
        raise ValueError("not a model document")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported format version {doc.get('format_version')}")
    w = doc["weights"]
    weights = NetworkWeights(
        n_inputs=int(w["n_inputs"]),
        n_hidden=int(w["n_hidden"]),
        w_in_hidden=np.asarray(w["w_in_hidden"], dtype=float).reshape(
            int(w["n_inputs"]) + 1, int(w["n_hidden"])
        ),
        w_hidden_out=np.asarray(w["w_hidden_out"], dtype=float),
        w_in_out=np.asarray(w["w_in_out"], dtype=float),
    )
    baseline = BaselineHazard(
        times=np.asarray(doc["baseline"]["times"], dtype=float),
        cumulative_hazard=np.asarray(doc["baseline"]["cumulative_hazard"],
                                     dtype=float),
    )
    c = doc["config"]
    config = TrainConfig(
        decay=float(c["decay"]),
        bias_decay=None if c["bias_decay"] is None else float(c["bias_decay"]),
        n_hidden=int(c["n_hidden"]),
        max_iterations=int(c["max_iterations"]),
        tolerance=float(c["tolerance"]),
        gradient_tolerance=float(c["gradient_tolerance"]),
        init_scale=float(c["init_scale"]),
        seed=int(c["seed"]),
    )
    idx = doc["training_index"]
    return FittedModel(
        weights=weights,
        baseline=baseline,
        codebook=codebook_from_dict(doc["codebook"]),
        config=config,
        final_objective=float(doc["final_objective"]),
        train_loglik=float(doc["train_loglik"]),
        stopped_by=str(doc["stopped_by"]),
        iterations=int(doc["iterations"]),
        train_etas=np.asarray(idx["etas"], dtype=float),
        train_categories=np.asarray(idx["categories"], dtype=np.int32).reshape(
            len(idx["etas"]), -1
        ),
    )


def dumps_model(model: FittedModel) -> str:
    return json.dumps(model_to_dict(model), indent=2, sort_keys=True) + "\n"


def save_model(path, model: FittedModel) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> FittedModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def model_digest(path) -> str:
    """Short content fingerprint of a model file, for version reporting."""
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()[:12]
