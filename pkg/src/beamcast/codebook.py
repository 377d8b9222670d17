"""DFT beam codebook: construction, beamforming gains, received training samples."""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .channel import ChannelRealization, UpaGeometry


@dataclasses.dataclass(frozen=True)
class Codebook:
    """Ordered set of orthonormal beams for a UPA.

    ``matrix`` has one beam per row; beam (a, b) sits at row a * m_h + b
    (row-major in the vertical/horizontal beam indices, fixed ordering used
    by every beam image and interchange file).
    """

    geometry: UpaGeometry
    matrix: np.ndarray  # (m_tx, m_tx) complex

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=np.complex128)
        if mat.shape != (self.geometry.m_tx, self.geometry.m_tx):
            raise ValueError("codebook matrix shape does not match geometry")
        object.__setattr__(self, "matrix", mat)

    @property
    def n_beams(self) -> int:
        return self.matrix.shape[0]

    def beam(self, index: int) -> np.ndarray:
        return self.matrix[index]

    def beam_at(self, vertical: int, horizontal: int) -> np.ndarray:
        return self.matrix[vertical * self.geometry.m_h + horizontal]


def _dft_factor(n: int) -> np.ndarray:
    """Size-n DFT matrix with orthonormal columns: entry (k, a) = exp(-2j*pi*k*a/n)/sqrt(n)."""
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / math.sqrt(n)


def dft_codebook(geometry: UpaGeometry) -> Codebook:
    """Beam (a, b) = (vertical DFT column a) kron (horizontal DFT column b)."""
    f_v = _dft_factor(geometry.m_v)
    f_h = _dft_factor(geometry.m_h)
    # kron of the factor matrices puts beam (a, b) in column a * m_h + b
    matrix = np.kron(f_v, f_h).T.copy()
    return Codebook(geometry=geometry, matrix=matrix)


def _as_vector(h) -> np.ndarray:
    return h.vector if isinstance(h, ChannelRealization) else np.asarray(h)


def beam_gain(h, w: np.ndarray) -> float:
    """Effective beamforming gain |h^H w|^2."""
    hv = _as_vector(h)
    if hv.shape != np.shape(w):
        raise ValueError(f"dimension mismatch: channel {hv.shape} vs beam {np.shape(w)}")
    return float(abs(np.vdot(hv, w)) ** 2)


def received_sample(h, w: np.ndarray, p: float, s: complex = 1.0, noise: complex = 0.0) -> complex:
    """One training observation: sqrt(p) * (h^H w) * s + noise.

    The caller adds any co-scheduled interference terms; during sweeping only
    one beam transmits per slot so none arise there.
    """
    if p < 0:
        raise ValueError("transmit power must be nonnegative")
    if abs(abs(s) - 1.0) > 1e-9:
        raise ValueError("training symbol must have unit magnitude")
    hv = _as_vector(h)
    if hv.shape != np.shape(w):
        raise ValueError(f"dimension mismatch: channel {hv.shape} vs beam {np.shape(w)}")
    return math.sqrt(p) * complex(np.vdot(hv, w)) * s + noise
