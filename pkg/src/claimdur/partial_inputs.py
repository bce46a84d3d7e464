"""Full duration distributions from any subset of the input variables.

Method A averages the risk score over all training records matching the
partial input and predicts from that single score; Method B averages the
matching records' survival curves pointwise.  Method A is the production
default, Method B is kept for comparison reports.  Matching is on
consolidated categories, never raw codes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .coxnet import FittedModel, category_index_matrix, predict_etas
from .encoding import VARIABLES, ClaimRecord, Codebook
from .survival import (
    SurvivalCurve,
    curve_is_truncated,
    curve_mean,
    curve_quantile,
    survival_from_eta,
)


class EmptyMatchError(ValueError):
    """No training record matches the partial input."""

    def __init__(self, singleton_counts: Mapping[str, int]):
        self.singleton_counts = dict(singleton_counts)
        self.most_restrictive = min(
            singleton_counts,
            key=lambda v: (singleton_counts[v], -VARIABLES.index(v)),
        )
        super().__init__(
            "no training records match the partial input; most restrictive "
            f"variable: {self.most_restrictive} "
            f"(per-variable match counts: {self.singleton_counts})"
        )


def validate_partial(partial: Mapping[str, str], codebook: Codebook) -> dict[str, str]:
    """Check variable names against the codebook; returns a plain dict."""
    out = {}
    for var, token in partial.items():
        if var not in VARIABLES:
            raise ValueError(f"unknown variable {var!r}")
        if var not in codebook.variables:
            raise ValueError(f"variable {var!r} is not in this model's codebook")
        out[var] = str(token)
    return out


class TrainingIndex:
    """Read-only (variable, category) -> record index for partial matching."""

    def __init__(self, codebook: Codebook, categories: np.ndarray, etas: np.ndarray):
        if categories.shape != (etas.size, len(codebook.variables)):
            raise ValueError("categories matrix shape mismatch")
        self.codebook = codebook
        self.categories = categories
        self.etas = np.asarray(etas, dtype=float)
        self._column = {v: j for j, v in enumerate(codebook.variables)}

    @classmethod
    def from_model(cls, model: FittedModel) -> "TrainingIndex":
        return cls(model.codebook, model.train_categories, model.train_etas)

    @classmethod
    def from_records(
        cls, model: FittedModel, records: Sequence[ClaimRecord]
    ) -> "TrainingIndex":
        return cls(
            model.codebook,
            category_index_matrix(records, model.codebook),
            predict_etas(model, records),
        )

    @property
    def n_records(self) -> int:
        return int(self.etas.size)

    def _category_index(self, variable: str, token: str) -> int:
        coding = self.codebook.codings[variable]
        return coding.categories.index(coding.resolve(token))

    def match_mask(self, partial: Mapping[str, str]) -> np.ndarray:
        partial = validate_partial(partial, self.codebook)
        mask = np.ones(self.n_records, dtype=bool)
        for var, token in partial.items():
            want = self._category_index(var, token)
            mask &= self.categories[:, self._column[var]] == want
        return mask

    def singleton_counts(self, partial: Mapping[str, str]) -> dict[str, int]:
        """Match count of each specified variable taken alone."""
        out = {}
        for var, token in partial.items():
            out[var] = int(self.match_mask({var: token}).sum())
        return out


def match_records(
    partial: Mapping[str, str],
    training: Sequence[ClaimRecord],
    codebook: Codebook,
) -> list[ClaimRecord]:
    """Training records whose consolidated categories equal the partial input's."""
    partial = validate_partial(partial, codebook)
    resolved = {v: codebook.resolve(v, t) for v, t in partial.items()}
    out = []
    for rec in training:
        ok = True
        for var, want in resolved.items():
            token = rec.covariates.get(var)
            if token is None or codebook.resolve(var, token) != want:
                ok = False
                break
        if ok:
            out.append(rec)
    return out


@dataclass(frozen=True)
class PartialPrediction:
    curve: SurvivalCurve
    eta: float | None  # the averaged risk score (Method A); None for Method B
    match_count: int
    method: str
    dropped: tuple[str, ...] = ()  # constraints removed by opt-in relaxation


def _resolve_index(
    model: FittedModel,
    training: Sequence[ClaimRecord] | None,
    index: TrainingIndex | None,
) -> TrainingIndex:
    if index is not None:
        return index
    if training is not None:
        return TrainingIndex.from_records(model, training)
    return TrainingIndex.from_model(model)


def predict_method_a(
    partial: Mapping[str, str],
    model: FittedModel,
    training: Sequence[ClaimRecord] | None = None,
    index: TrainingIndex | None = None,
) -> PartialPrediction:
    """Average risk score over matching records, then one curve from it."""
    idx = _resolve_index(model, training, index)
    mask = idx.match_mask(partial)
    count = int(mask.sum())
    if count == 0:
        raise EmptyMatchError(idx.singleton_counts(partial))
    eta_bar = float(np.mean(idx.etas[mask]))
    return PartialPrediction(
        curve=survival_from_eta(model.baseline, eta_bar),
        eta=eta_bar,
        match_count=count,
        method="A",
    )


def predict_method_b(
    partial: Mapping[str, str],
    model: FittedModel,
    training: Sequence[ClaimRecord] | None = None,
    index: TrainingIndex | None = None,
) -> PartialPrediction:
    """Pointwise average of the matching records' predicted survival curves."""
    idx = _resolve_index(model, training, index)
    mask = idx.match_mask(partial)
    count = int(mask.sum())
    if count == 0:
        raise EmptyMatchError(idx.singleton_counts(partial))
    h0 = model.baseline.cumulative_hazard
    etas = idx.etas[mask]
    total = np.zeros_like(h0)
    for start in range(0, etas.size, 256):  # bound peak memory on big match sets
        chunk = np.exp(etas[start:start + 256])
        total += np.exp(-np.outer(h0, chunk)).sum(axis=1)
    return PartialPrediction(
        curve=SurvivalCurve(model.baseline.times.copy(), total / count),
        eta=None,
        match_count=count,
        method="B",
    )


def predict_relaxing(
    partial: Mapping[str, str],
    model: FittedModel,
    method: str = "A",
    training: Sequence[ClaimRecord] | None = None,
    index: TrainingIndex | None = None,
) -> PartialPrediction:
    """Opt-in fallback: drop the most restrictive constraint until matches exist."""
    idx = _resolve_index(model, training, index)
    predict = predict_method_a if method == "A" else predict_method_b
    current = dict(partial)
    dropped: list[str] = []
    while True:
        try:
            result = predict(current, model, index=idx)
            if dropped:
                result = PartialPrediction(
                    curve=result.curve, eta=result.eta,
                    match_count=result.match_count, method=result.method,
                    dropped=tuple(dropped),
                )
            return result
        except EmptyMatchError as err:
            if not current:
                raise
            del current[err.most_restrictive]
            dropped.append(err.most_restrictive)


def prediction_payload(result: PartialPrediction) -> dict:
    """Wire-format mapping for one prediction, shared by the CLI and service.

    The mean is always truncated at the last baseline event time; the
    mean_truncated flag marks curves that still carry survival mass there.
    """
    curve = result.curve
    return {
        "curve": {
            "times": [float(t) for t in curve.times],
            "survival": [float(s) for s in curve.survival],
        },
        "mean": curve_mean(curve),
        "median": curve_quantile(curve, 0.5),
        "q1": curve_quantile(curve, 0.25),
        "q3": curve_quantile(curve, 0.75),
        "mean_truncated": curve_is_truncated(curve),
        "match_count": result.match_count,
        "eta": result.eta,
        "method": result.method,
        "dropped": list(result.dropped),
    }
