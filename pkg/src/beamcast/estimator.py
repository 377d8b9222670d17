"""Amplitude reconstruction from squared-part images, LS effective channels, MSE."""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .sweep import BeamImage


@dataclasses.dataclass
class ClampCounter:
    """Counts negative squared-power pixels clamped during reconstruction."""

    count: int = 0


@dataclasses.dataclass(frozen=True)
class EffectiveChannelEstimate:
    """Per-(ue, beam) complex effective channels h^H w with their provenance."""

    values: np.ndarray  # (K, n_beams) complex
    provenance: str  # "oracle" | "ls_from_prediction"

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.ndim != 2:
            raise ValueError("effective channel table must be K x n_beams")
        if not np.all(np.isfinite(vals)):
            raise ValueError("effective channel estimate contains non-finite values")
        if self.provenance not in ("oracle", "ls_from_prediction"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "values", vals)

    @property
    def gains(self) -> np.ndarray:
        return np.abs(self.values) ** 2


def _unwrap(img) -> np.ndarray:
    return img.values if isinstance(img, BeamImage) else np.asarray(img, dtype=float)


def reconstruct_amplitude(
    real_sq,
    imag_sq,
    signs: tuple | None = None,
    clamp_counter: ClampCounter | None = None,
) -> np.ndarray:
    """Rebuild complex amplitudes: sign_r * sqrt(real_sq) + j * sign_i * sqrt(imag_sq).

    Without ``signs`` both signs default to +1 (paper-fidelity mode, which
    keeps magnitudes but not phases). Negative inputs, which regression
    outputs may produce, clamp to zero; ``clamp_counter`` tallies them.
    """
    re_sq = _unwrap(real_sq)
    im_sq = _unwrap(imag_sq)
    if re_sq.shape != im_sq.shape:
        raise ValueError("real/imag images must share a shape")
    clamped = int(np.sum(re_sq < 0) + np.sum(im_sq < 0))
    if clamped and clamp_counter is not None:
        clamp_counter.count += clamped
    re_sq = np.maximum(re_sq, 0.0)
    im_sq = np.maximum(im_sq, 0.0)
    if signs is None:
        sign_r = 1.0
        sign_i = 1.0
    else:
        sign_r = _unwrap(signs[0])
        sign_i = _unwrap(signs[1])
    return sign_r * np.sqrt(re_sq) + 1j * sign_i * np.sqrt(im_sq)


def ls_effective_channel(r_hat, s: complex = 1.0, p: float = 1.0):
    """LS inversion of the training model: conj(s) * r_hat / sqrt(p) for |s| = 1."""
    if p <= 0:
        raise ValueError("training power must be positive")
    mag = abs(s)
    if mag == 0:
        raise ValueError("training symbol must be nonzero")
    pseudo = np.conj(s) / (mag * mag)
    return pseudo * np.asarray(r_hat) / math.sqrt(p)


def mse(predicted, truth) -> float:
    """Batch MSE: mean over items of the summed squared pixel error."""
    pred = np.asarray(
        [_unwrap(p) for p in predicted] if not isinstance(predicted, np.ndarray) else predicted,
        dtype=float,
    )
    true = np.asarray(
        [_unwrap(t) for t in truth] if not isinstance(truth, np.ndarray) else truth,
        dtype=float,
    )
    if pred.shape != true.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {true.shape}")
    if pred.ndim < 1 or pred.shape[0] < 1:
        raise ValueError("batch must hold at least one item")
    diff = pred - true
    per_item = diff.reshape(pred.shape[0], -1)
    return float(np.mean(np.sum(per_item * per_item, axis=1)))
