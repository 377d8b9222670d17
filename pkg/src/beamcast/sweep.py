"""Beam sweeping into beam-quality images, episode assembly, and interchange files.

Interchange layout (versioned, shared with the external trainer):

* line 1: UTF-8 JSON header terminated by ``\\n`` with keys
  ``{version, kind, K, M_v, M_h, m_v, m_h, s, frames, seed, records,
  dtype: "f64le", beam_order: "row-major"}``
* then ``records`` fixed-size records of raw little-endian float64.

Dataset record (``kind == "dataset"``), all pixels row-major in the beam grid:
``[ue, frame, s x (low real_sq, low imag_sq), target high real_sq, target
high imag_sq]`` where ``frame`` is the last input frame t and the target
belongs to frame t+1; input frames run oldest to newest. Prediction record
(``kind == "predictions"``): ``[ue, frame, high real_sq, high imag_sq]``
where ``frame`` is the frame the images belong to.
"""

from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .channel import ChannelRealization, Scenario, UpaGeometry
from .codebook import Codebook, dft_codebook, received_sample
from .config import ScenarioConfig

INTERCHANGE_VERSION = 1
IMAGE_KINDS = ("power", "real_sq", "imag_sq", "sign_real", "sign_imag")

_SWEEP_STREAM = 0xB3


class InterchangeError(ValueError):
    """Malformed interchange file; ``byte_offset`` locates the problem."""

    def __init__(self, message: str, byte_offset: int | None = None):
        if byte_offset is not None:
            message = f"{message} (byte offset {byte_offset})"
        super().__init__(message)
        self.byte_offset = byte_offset


@dataclasses.dataclass(frozen=True)
class BeamImage:
    """2-D grid of per-beam measurements on the beam-index lattice."""

    kind: str
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.kind not in IMAGE_KINDS:
            raise ValueError(f"unknown image kind {self.kind!r}")
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise ValueError("beam image must be a 2-D array")
        if self.kind in ("power", "real_sq", "imag_sq"):
            if np.any(vals < 0):
                raise ValueError(f"{self.kind} image must be nonnegative")
        else:
            if not np.all(np.isin(vals, (-1.0, 1.0))):
                raise ValueError("sign image entries must be -1 or +1")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


@dataclasses.dataclass(frozen=True)
class SweepImages:
    """All planes recorded while sweeping one UE in one frame."""

    real_sq: BeamImage
    imag_sq: BeamImage
    power: BeamImage
    sign_real: BeamImage
    sign_imag: BeamImage


@dataclasses.dataclass(frozen=True)
class Episode:
    """Window of s low-resolution input pairs plus the next frame's high-res target."""

    ue: int
    frame: int  # last input frame t; target belongs to frame t+1
    inputs: tuple[tuple[BeamImage, BeamImage], ...]  # (real_sq, imag_sq), oldest first
    target: tuple[BeamImage, BeamImage]

    def __post_init__(self) -> None:
        if len(self.inputs) < 1:
            raise ValueError("episode needs at least one input frame")

    @property
    def window(self) -> int:
        return len(self.inputs)


def sweep_high_res(
    h: ChannelRealization | np.ndarray,
    codebook: Codebook,
    p: float,
    noise_power: float,
    seed,
    s: complex = 1.0,
) -> SweepImages:
    """Sweep every codebook beam in index order and record the measurement planes.

    Each beam gets an independent complex AWGN draw of total variance
    ``noise_power``; the power plane is computed as real_sq + imag_sq so the
    decomposition identity holds exactly.
    """
    if p <= 0:
        raise ValueError("sweep power must be positive")
    geom = codebook.geometry
    rng = np.random.default_rng(seed)
    noise_draws = rng.standard_normal((codebook.n_beams, 2))  # per-beam (re, im) pairs
    scale = math.sqrt(noise_power / 2.0) if noise_power > 0 else 0.0
    re = np.empty(codebook.n_beams)
    im = np.empty(codebook.n_beams)
    for i in range(codebook.n_beams):
        noise = scale * complex(noise_draws[i, 0], noise_draws[i, 1])
        r = received_sample(h, codebook.beam(i), p, s, noise)
        re[i] = r.real
        im[i] = r.imag
    shape = (geom.m_v, geom.m_h)
    real_sq = (re * re).reshape(shape)
    imag_sq = (im * im).reshape(shape)
    return SweepImages(
        real_sq=BeamImage("real_sq", real_sq),
        imag_sq=BeamImage("imag_sq", imag_sq),
        power=BeamImage("power", real_sq + imag_sq),
        sign_real=BeamImage("sign_real", np.where(re >= 0, 1.0, -1.0).reshape(shape)),
        sign_imag=BeamImage("sign_imag", np.where(im >= 0, 1.0, -1.0).reshape(shape)),
    )


def downsample_to_low_res(high: BeamImage, factor: tuple[int, int] = (2, 2)) -> BeamImage:
    """Uniform lattice subsampling: low(a, b) = high(factor_r * a, factor_c * b)."""
    fr, fc = factor
    if high.rows % fr or high.cols % fc:
        raise ValueError(
            f"image {high.rows}x{high.cols} not divisible by factor {factor}"
        )
    return BeamImage(high.kind, high.values[::fr, ::fc])


def decimated_channel(h: ChannelRealization | np.ndarray, geometry: UpaGeometry, low_geometry: UpaGeometry) -> np.ndarray:
    """Channel seen by the every-other-antenna subarray used for wide-beam sweeps."""
    vec = h.vector if isinstance(h, ChannelRealization) else np.asarray(h)
    sv = geometry.m_v // low_geometry.m_v
    sh = geometry.m_h // low_geometry.m_h
    grid = vec.reshape(geometry.m_v, geometry.m_h)
    return grid[::sv, ::sh].reshape(low_geometry.m_tx)


def sweep_wide_beam(
    h: ChannelRealization | np.ndarray,
    geometry: UpaGeometry,
    low_geometry: UpaGeometry,
    p: float,
    noise_power: float,
    seed,
    s: complex = 1.0,
) -> SweepImages:
    """Alternative low-resolution acquisition: sweep a small DFT codebook on a decimated array."""
    if geometry.m_v % low_geometry.m_v or geometry.m_h % low_geometry.m_h:
        raise ValueError("low-resolution grid must divide the antenna grid")
    low_book = dft_codebook(low_geometry)
    return sweep_high_res(decimated_channel(h, geometry, low_geometry), low_book, p, noise_power, seed, s)


def build_episodes(
    low_pairs: Sequence[tuple[BeamImage, BeamImage]],
    high_pairs: Sequence[tuple[BeamImage, BeamImage]],
    s: int,
    ue: int = 0,
) -> list[Episode]:
    """One episode per frame t with a complete window t-s+1..t and target t+1."""
    if s < 1:
        raise ValueError("window length s must be >= 1")
    if len(low_pairs) != len(high_pairs):
        raise ValueError("low/high sequences must cover the same frames")
    if len(low_pairs) < s + 1:
        raise ValueError(
            f"sequence of {len(low_pairs)} frames too short for window s={s}"
        )
    episodes = []
    for t in range(s - 1, len(low_pairs) - 1):
        episodes.append(
            Episode(
                ue=ue,
                frame=t,
                inputs=tuple(low_pairs[t - s + 1 : t + 1]),
                target=high_pairs[t + 1],
            )
        )
    return episodes


@dataclasses.dataclass(frozen=True)
class SweptScenario:
    """Per-(frame, ue) sweep results at both resolutions."""

    high: list[list[SweepImages]]  # [frame][ue]
    low: list[list[SweepImages]]  # [frame][ue]


def sweep_scenario(scenario: Scenario, config: ScenarioConfig, seed: int) -> SweptScenario:
    """Sweep every frame and UE of a scenario, deterministically per (seed, ue, frame)."""
    codebook = dft_codebook(scenario.geometry)
    low_geom = UpaGeometry.from_carrier(config.m_v_low, config.m_h_low, config.carrier_frequency_hz)
    p = config.sweep_power_w
    n0 = config.noise_power_w
    frames, k_ues = scenario.channels.shape[:2]
    high: list[list[SweepImages]] = []
    low: list[list[SweepImages]] = []
    for t in range(frames):
        high_row: list[SweepImages] = []
        low_row: list[SweepImages] = []
        for k in range(k_ues):
            sweep_seed = np.random.SeedSequence([_SWEEP_STREAM, int(seed), k, t])
            images = sweep_high_res(scenario.channels[t, k], codebook, p, n0, sweep_seed)
            high_row.append(images)
            if config.lowres_mode == "wide_beam":
                wide_seed = np.random.SeedSequence([_SWEEP_STREAM + 1, int(seed), k, t])
                low_row.append(
                    sweep_wide_beam(scenario.channels[t, k], scenario.geometry, low_geom, p, n0, wide_seed)
                )
            else:
                low_row.append(
                    SweepImages(
                        real_sq=downsample_to_low_res(images.real_sq),
                        imag_sq=downsample_to_low_res(images.imag_sq),
                        power=downsample_to_low_res(images.power),
                        sign_real=downsample_to_low_res(images.sign_real),
                        sign_imag=downsample_to_low_res(images.sign_imag),
                    )
                )
        high.append(high_row)
        low.append(low_row)
    return SweptScenario(high=high, low=low)


def episodes_from_swept(swept: SweptScenario, s: int) -> list[Episode]:
    """Episodes for every UE of a swept scenario, ue-major then frame-major."""
    frames = len(swept.high)
    k_ues = len(swept.high[0]) if frames else 0
    episodes: list[Episode] = []
    for k in range(k_ues):
        low_pairs = [(swept.low[t][k].real_sq, swept.low[t][k].imag_sq) for t in range(frames)]
        high_pairs = [(swept.high[t][k].real_sq, swept.high[t][k].imag_sq) for t in range(frames)]
        episodes.extend(build_episodes(low_pairs, high_pairs, s, ue=k))
    return episodes


# ---------------------------------------------------------------------------
# interchange files


@dataclasses.dataclass(frozen=True)
class InterchangeHeader:
    kind: str  # "dataset" | "predictions"
    k_ues: int
    m_v: int
    m_h: int
    m_v_low: int
    m_h_low: int
    s: int
    frames: int
    seed: int
    records: int
    version: int = INTERCHANGE_VERSION

    def to_json_line(self) -> bytes:
        obj = {
            "version": self.version,
            "kind": self.kind,
            "K": self.k_ues,
            "M_v": self.m_v,
            "M_h": self.m_h,
            "m_v": self.m_v_low,
            "m_h": self.m_h_low,
            "s": self.s,
            "frames": self.frames,
            "seed": self.seed,
            "records": self.records,
            "dtype": "f64le",
            "beam_order": "row-major",
        }
        return (json.dumps(obj, sort_keys=True) + "\n").encode("utf-8")

    @property
    def m_tx(self) -> int:
        return self.m_v * self.m_h

    @property
    def m_tx_low(self) -> int:
        return self.m_v_low * self.m_h_low

    @property
    def record_floats(self) -> int:
        if self.kind == "dataset":
            return 2 + self.s * 2 * self.m_tx_low + 2 * self.m_tx
        return 2 + 2 * self.m_tx

    @classmethod
    def from_json_obj(cls, obj: dict) -> "InterchangeHeader":
        try:
            header = cls(
                kind=obj["kind"],
                k_ues=int(obj["K"]),
                m_v=int(obj["M_v"]),
                m_h=int(obj["M_h"]),
                m_v_low=int(obj["m_v"]),
                m_h_low=int(obj["m_h"]),
                s=int(obj["s"]),
                frames=int(obj["frames"]),
                seed=int(obj["seed"]),
                records=int(obj["records"]),
                version=int(obj["version"]),
            )
        except KeyError as exc:
            raise InterchangeError(f"header missing key {exc.args[0]!r}", byte_offset=0) from exc
        if obj.get("dtype") != "f64le":
            raise InterchangeError(f"unsupported dtype {obj.get('dtype')!r}", byte_offset=0)
        if obj.get("beam_order") != "row-major":
            raise InterchangeError(f"unsupported beam order {obj.get('beam_order')!r}", byte_offset=0)
        if header.kind not in ("dataset", "predictions"):
            raise InterchangeError(f"unknown file kind {header.kind!r}", byte_offset=0)
        if header.version != INTERCHANGE_VERSION:
            raise InterchangeError(f"unsupported version {header.version}", byte_offset=0)
        return header


def dataset_header(config: ScenarioConfig, seed: int, records: int) -> InterchangeHeader:
    return InterchangeHeader(
        kind="dataset",
        k_ues=config.k_ues,
        m_v=config.m_v,
        m_h=config.m_h,
        m_v_low=config.m_v_low,
        m_h_low=config.m_h_low,
        s=config.window_s,
        frames=config.frames,
        seed=seed,
        records=records,
    )


def write_dataset(episodes: Sequence[Episode], path: str | Path, header: InterchangeHeader) -> None:
    """Write episodes in (ue, frame) order; round-trips bit-exactly through read_dataset."""
    if header.kind != "dataset":
        raise ValueError("header kind must be 'dataset'")
    if header.records != len(episodes):
        raise ValueError("header record count does not match the episode list")
    ordered = sorted(episodes, key=lambda e: (e.ue, e.frame))
    with open(path, "wb") as fh:
        fh.write(header.to_json_line())
        for ep in ordered:
            if ep.window != header.s:
                raise ValueError(f"episode window {ep.window} does not match header s={header.s}")
            parts = [np.array([ep.ue, ep.frame], dtype="<f8")]
            for re_img, im_img in ep.inputs:
                _check_shape(re_img, header.m_v_low, header.m_h_low)
                _check_shape(im_img, header.m_v_low, header.m_h_low)
                parts.append(re_img.values.astype("<f8").ravel())
                parts.append(im_img.values.astype("<f8").ravel())
            _check_shape(ep.target[0], header.m_v, header.m_h)
            _check_shape(ep.target[1], header.m_v, header.m_h)
            parts.append(ep.target[0].values.astype("<f8").ravel())
            parts.append(ep.target[1].values.astype("<f8").ravel())
            fh.write(np.concatenate(parts).tobytes())


def _check_shape(img: BeamImage, rows: int, cols: int) -> None:
    if img.values.shape != (rows, cols):
        raise ValueError(f"image shape {img.values.shape} does not match ({rows}, {cols})")


def _read_header_and_payload(path: str | Path) -> tuple[InterchangeHeader, np.ndarray, int]:
    raw = Path(path).read_bytes()
    newline = raw.find(b"\n")
    if newline < 0:
        raise InterchangeError("missing header line", byte_offset=0)
    try:
        obj = json.loads(raw[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InterchangeError(f"malformed JSON header: {exc}", byte_offset=0) from exc
    if not isinstance(obj, dict):
        raise InterchangeError("header is not a JSON object", byte_offset=0)
    header = InterchangeHeader.from_json_obj(obj)
    payload = raw[newline + 1 :]
    expected = header.records * header.record_floats * 8
    if len(payload) != expected:
        raise InterchangeError(
            f"payload holds {len(payload)} bytes but header implies {expected}",
            byte_offset=newline + 1 + min(len(payload), expected),
        )
    floats = np.frombuffer(payload, dtype="<f8")
    return header, floats, newline + 1


def read_dataset(path: str | Path) -> tuple[InterchangeHeader, list[Episode]]:
    """Inverse of write_dataset."""
    header, floats, payload_start = _read_header_and_payload(path)
    if header.kind != "dataset":
        raise InterchangeError(f"expected a dataset file, found kind {header.kind!r}", byte_offset=0)
    n = header.record_floats
    low = header.m_tx_low
    episodes = []
    for i in range(header.records):
        rec = floats[i * n : (i + 1) * n]
        if not np.all(np.isfinite(rec)):
            raise InterchangeError(
                f"non-finite values in record {i}", byte_offset=payload_start + i * n * 8
            )
        ue, frame = int(rec[0]), int(rec[1])
        off = 2
        inputs = []
        for _ in range(header.s):
            re_img = rec[off : off + low].reshape(header.m_v_low, header.m_h_low)
            im_img = rec[off + low : off + 2 * low].reshape(header.m_v_low, header.m_h_low)
            inputs.append((BeamImage("real_sq", re_img), BeamImage("imag_sq", im_img)))
            off += 2 * low
        tgt_re = rec[off : off + header.m_tx].reshape(header.m_v, header.m_h)
        tgt_im = rec[off + header.m_tx : off + 2 * header.m_tx].reshape(header.m_v, header.m_h)
        episodes.append(
            Episode(
                ue=ue,
                frame=frame,
                inputs=tuple(inputs),
                target=(BeamImage("real_sq", tgt_re), BeamImage("imag_sq", tgt_im)),
            )
        )
    return header, episodes


def write_predictions(
    images: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]],
    path: str | Path,
    header: InterchangeHeader,
) -> None:
    """Write per-(ue, frame) predicted high-res image pairs."""
    if header.kind != "predictions":
        raise ValueError("header kind must be 'predictions'")
    if header.records != len(images):
        raise ValueError("header record count does not match the image table")
    with open(path, "wb") as fh:
        fh.write(header.to_json_line())
        for (ue, frame), (re_img, im_img) in sorted(images.items()):
            re_arr = np.asarray(re_img, dtype="<f8")
            im_arr = np.asarray(im_img, dtype="<f8")
            if re_arr.shape != (header.m_v, header.m_h) or im_arr.shape != (header.m_v, header.m_h):
                raise ValueError(f"prediction for ue={ue} frame={frame} has wrong shape")
            fh.write(np.array([ue, frame], dtype="<f8").tobytes())
            fh.write(re_arr.ravel().tobytes())
            fh.write(im_arr.ravel().tobytes())


def read_predictions(
    path: str | Path, expected_geometry: tuple[int, int] | None = None
) -> tuple[InterchangeHeader, dict[tuple[int, int], tuple[np.ndarray, np.ndarray]]]:
    """Load a predictions file into an immutable per-(ue, frame) table.

    Rejects NaN payloads and, when ``expected_geometry`` is given, any
    geometry mismatch.
    """
    header, floats, payload_start = _read_header_and_payload(path)
    if header.kind != "predictions":
        raise InterchangeError(f"expected a predictions file, found kind {header.kind!r}", byte_offset=0)
    if expected_geometry is not None and (header.m_v, header.m_h) != expected_geometry:
        raise InterchangeError(
            f"prediction geometry {header.m_v}x{header.m_h} does not match "
            f"expected {expected_geometry[0]}x{expected_geometry[1]}",
            byte_offset=0,
        )
    n = header.record_floats
    table: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
    for i in range(header.records):
        rec = floats[i * n : (i + 1) * n]
        if np.any(np.isnan(rec)):
            raise InterchangeError(
                f"NaN values in prediction record {i}", byte_offset=payload_start + i * n * 8
            )
        ue, frame = int(rec[0]), int(rec[1])
        re_img = rec[2 : 2 + header.m_tx].reshape(header.m_v, header.m_h).copy()
        im_img = rec[2 + header.m_tx :].reshape(header.m_v, header.m_h).copy()
        re_img.flags.writeable = False
        im_img.flags.writeable = False
        table[(ue, frame)] = (re_img, im_img)
    return header, table
