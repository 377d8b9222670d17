"""High-resolution beam-image predictors: oracle, persistence, interpolation, external.

The analytic baselines deliberately use only the newest low-resolution input
even when the window is longer; temporal fusion is the external trainer's
job. All predictors are deterministic.
"""

from __future__ import annotations

import numpy as np

from .sweep import Episode, read_predictions


class MissingPredictionError(KeyError):
    """External predictions file has no entry for a requested (ue, frame)."""


def _source_coords(n_high: int, n_low: int) -> np.ndarray:
    """Low-grid coordinates of the high-res lattice under low(a) = high(factor*a)."""
    factor = n_high // n_low
    return np.arange(n_high) / factor


def upsample_nearest(low: np.ndarray, out_shape: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbor onto the high-res lattice; exact on subsampled pixels."""
    low = np.asarray(low, dtype=float)
    rows = (np.floor(_source_coords(out_shape[0], low.shape[0]))).astype(int)
    cols = (np.floor(_source_coords(out_shape[1], low.shape[1]))).astype(int)
    return low[np.ix_(rows, cols)]


def upsample_bilinear(low: np.ndarray, out_shape: tuple[int, int]) -> np.ndarray:
    """Bilinear upsampling on the beam-index lattice with edge clamping."""
    low = np.asarray(low, dtype=float)
    out = _interp_axis(low, _source_coords(out_shape[0], low.shape[0]), axis=0)
    out = _interp_axis(out, _source_coords(out_shape[1], low.shape[1]), axis=1)
    return out


def _interp_axis(values: np.ndarray, coords: np.ndarray, axis: int) -> np.ndarray:
    values = np.moveaxis(values, axis, 0)
    n = values.shape[0]
    i0 = np.clip(np.floor(coords).astype(int), 0, n - 1)
    i1 = np.clip(i0 + 1, 0, n - 1)
    t = coords - np.floor(coords)
    out = (1 - t)[:, None] * values[i0] + t[:, None] * values[i1]
    return np.moveaxis(out, 0, axis)


def _catmull_rom_weight(u: np.ndarray) -> np.ndarray:
    """Catmull-Rom cubic kernel (a = -0.5):

    w(u) = 1.5|u|^3 - 2.5|u|^2 + 1          for |u| <= 1
         = -0.5|u|^3 + 2.5|u|^2 - 4|u| + 2  for 1 < |u| < 2
         = 0 otherwise
    """
    au = np.abs(u)
    inner = (1.5 * au - 2.5) * au * au + 1.0
    outer = ((-0.5 * au + 2.5) * au - 4.0) * au + 2.0
    return np.where(au <= 1.0, inner, np.where(au < 2.0, outer, 0.0))


def _cubic_axis(values: np.ndarray, coords: np.ndarray, axis: int) -> np.ndarray:
    values = np.moveaxis(values, axis, 0)
    n = values.shape[0]
    base = np.floor(coords).astype(int)
    t = coords - base
    out = np.zeros((len(coords),) + values.shape[1:])
    for k in range(-1, 3):
        idx = np.clip(base + k, 0, n - 1)  # edge clamping
        w = _catmull_rom_weight(k - t)
        out += w[:, None] * values[idx]
    return np.moveaxis(out, 0, axis)


def upsample_bicubic(low: np.ndarray, out_shape: tuple[int, int]) -> np.ndarray:
    """Separable Catmull-Rom upsampling with edge clamping."""
    low = np.asarray(low, dtype=float)
    out = _cubic_axis(low, _source_coords(out_shape[0], low.shape[0]), axis=0)
    out = _cubic_axis(out, _source_coords(out_shape[1], low.shape[1]), axis=1)
    return out


class OraclePredictor:
    """Returns the true next-frame images; the upper-bound predictor."""

    name = "oracle"

    def predict(self, episode: Episode, ground_truth=None) -> tuple[np.ndarray, np.ndarray]:
        truth = ground_truth if ground_truth is not None else episode.target
        if truth is None:
            raise ValueError("oracle predictor requires the ground-truth images")
        re_img, im_img = truth
        return _values(re_img), _values(im_img)


class PersistencePredictor:
    """Nearest-neighbor upsampling of the newest low-resolution input."""

    name = "persistence"

    def __init__(self, out_shape: tuple[int, int]):
        self.out_shape = out_shape

    def predict(self, episode: Episode, ground_truth=None) -> tuple[np.ndarray, np.ndarray]:
        re_img, im_img = episode.inputs[-1]
        return (
            upsample_nearest(_values(re_img), self.out_shape),
            upsample_nearest(_values(im_img), self.out_shape),
        )


class InterpolationPredictor:
    """Bilinear or bicubic upsampling of the newest low-resolution input."""

    def __init__(self, out_shape: tuple[int, int], method: str = "bilinear"):
        if method not in ("bilinear", "bicubic"):
            raise ValueError(f"unknown interpolation method {method!r}")
        self.out_shape = out_shape
        self.method = method
        self.name = method

    def predict(self, episode: Episode, ground_truth=None) -> tuple[np.ndarray, np.ndarray]:
        fn = upsample_bilinear if self.method == "bilinear" else upsample_bicubic
        re_img, im_img = episode.inputs[-1]
        # squared powers cannot be negative; cubic overshoot is clamped away
        return (
            np.maximum(fn(_values(re_img), self.out_shape), 0.0),
            np.maximum(fn(_values(im_img), self.out_shape), 0.0),
        )


class ExternalPredictor:
    """Looks up frame t+1 in a predictions interchange file."""

    name = "external"

    def __init__(self, path, expected_geometry: tuple[int, int] | None = None):
        self.header, self.table = read_predictions(path, expected_geometry)

    def predict(self, episode: Episode, ground_truth=None) -> tuple[np.ndarray, np.ndarray]:
        key = (episode.ue, episode.frame + 1)
        if key not in self.table:
            raise MissingPredictionError(
                f"no prediction for ue={episode.ue} frame={episode.frame + 1}"
            )
        return self.table[key]


def _values(img) -> np.ndarray:
    return img.values if hasattr(img, "values") else np.asarray(img, dtype=float)


def make_predictor(name: str, out_shape: tuple[int, int], predictions_path=None):
    """Factory used by the CLI: oracle | persistence | bilinear | bicubic | external."""
    if name == "oracle":
        return OraclePredictor()
    if name == "persistence":
        return PersistencePredictor(out_shape)
    if name in ("bilinear", "bicubic"):
        return InterpolationPredictor(out_shape, name)
    if name == "external":
        if predictions_path is None:
            raise ValueError("external predictor needs a predictions file path")
        return ExternalPredictor(predictions_path, out_shape)
    raise ValueError(f"unknown predictor {name!r}")
