"""Speech-in-noise feature pipeline.

Mixes a speech segment into a longer noise track at a target SNR, extracts
band-averaged STFT magnitudes, and embeds sliding windows of those features
as covariance matrices (SPD stream) or dominant subspaces (Grassmann stream).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from scipy.io import wavfile

from .geometry.base import ManifoldPoint
from .geometry.spd import sym


class AudioError(RuntimeError):
    """Unreadable or inconsistent audio input."""


@dataclass(frozen=True)
class AudioPipelineConfig:
    speech_path: Union[str, Path]
    noise_path: Union[str, Path]
    snr_db: float = -3.0
    speech_offset_s: float = 5.0
    stft_window: int = 256
    stft_hop: int = 128
    channels_out: int = 16
    cov_window: int = 32
    subspace_k: int = 1
    epsilon_reg: float = 1e-6

    def __post_init__(self):
        w = self.stft_window
        if w < 2 or w & (w - 1):
            raise ValueError("stft_window must be a power of two")
        if self.stft_hop < 1:
            raise ValueError("stft_hop must be positive")
        if self.channels_out < 1 or (w // 2) % self.channels_out:
            raise ValueError("channels_out must divide stft_window/2")
        if self.cov_window < self.channels_out:
            raise ValueError("cov_window must be >= channels_out")
        if not 1 <= self.subspace_k < self.channels_out:
            raise ValueError("need 1 <= subspace_k < channels_out")
        if not self.epsilon_reg > 0:
            raise ValueError("epsilon_reg must be positive")


@dataclass(frozen=True)
class MixResult:
    samples: np.ndarray
    sample_rate: int
    speech_offset: int    # samples
    speech_length: int    # samples
    speech_gain: float


def load_wav(path: Union[str, Path]) -> tuple[int, np.ndarray]:
    """Read a PCM WAV as mono float64; integer formats are scaled to [-1, 1)."""
    try:
        rate, data = wavfile.read(path)
    except (OSError, ValueError) as exc:
        raise AudioError(f"cannot read WAV file {path}: {exc}") from exc
    if data.dtype == np.int16:
        samples = data.astype(float) / 32768.0
    elif data.dtype == np.int32:
        samples = data.astype(float) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(float)
    else:
        raise AudioError(f"unsupported WAV sample format {data.dtype} in {path}")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return int(rate), samples


def write_wav(path: Union[str, Path], rate: int, samples: np.ndarray) -> None:
    clipped = np.clip(samples, -1.0, 1.0)
    wavfile.write(path, rate, (clipped * 32767).astype(np.int16))


def mix_audio(cfg: AudioPipelineConfig) -> MixResult:
    """Insert the speech segment into the noise track at the configured SNR.

    The speech gain is set so that 10 log10(P_speech / P_noise) over the
    overlap equals snr_db.  A silent speech file leaves the noise unchanged.
    """
    noise_rate, noise = load_wav(cfg.noise_path)
    speech_rate, speech = load_wav(cfg.speech_path)
    if noise_rate != speech_rate:
        raise AudioError(
            f"sample-rate mismatch: noise {noise_rate} Hz vs speech "
            f"{speech_rate} Hz (resampling not supported)"
        )
    offset = int(round(cfg.speech_offset_s * noise_rate))
    if offset < 0 or offset + len(speech) > len(noise):
        raise AudioError(
            f"speech ({len(speech)} samples at offset {offset}) does not fit "
            f"inside the noise track ({len(noise)} samples)"
        )
    p_speech = float(np.mean(speech**2))
    p_noise = float(np.mean(noise[offset : offset + len(speech)] ** 2))
    if p_speech == 0.0:
        gain = 0.0
    else:
        gain = float(np.sqrt(p_noise * 10.0 ** (cfg.snr_db / 10.0) / p_speech))
    out = noise.copy()
    out[offset : offset + len(speech)] += gain * speech
    return MixResult(out, noise_rate, offset, len(speech), gain)


def stft_features(samples: np.ndarray, cfg: AudioPipelineConfig) -> np.ndarray:
    """Per-frame band energies: Hann-windowed magnitude spectrum with the DC
    bin dropped, averaged over consecutive groups of bins.

    Returns an array of shape (frames, channels_out).
    """
    w, hop = cfg.stft_window, cfg.stft_hop
    if len(samples) < w:
        raise AudioError(
            f"input too short: {len(samples)} samples < window {w}"
        )
    n_frames = 1 + (len(samples) - w) // hop
    idx = np.arange(n_frames)[:, None] * hop + np.arange(w)[None, :]
    frames = samples[idx] * np.hanning(w)
    mag = np.abs(np.fft.rfft(frames, axis=1))[:, 1 : w // 2 + 1]
    group = (w // 2) // cfg.channels_out
    return mag.reshape(n_frames, cfg.channels_out, group).mean(axis=2)


def sliding_cov(
    features: np.ndarray, window: int, epsilon_reg: float
) -> list[ManifoldPoint]:
    """Regularized sample covariance over a sliding window (hop = 1 frame)."""
    n, dim = features.shape
    if window < dim:
        raise ValueError("window must be >= feature dimension")
    if n < window:
        raise ValueError(f"need at least {window} frames, got {n}")
    ridge = epsilon_reg * np.eye(dim)
    out = []
    for j in range(n - window + 1):
        seg = features[j : j + window]
        centered = seg - seg.mean(axis=0)
        cov = centered.T @ centered / (window - 1)
        out.append(ManifoldPoint(sym(cov) + ridge, "spd"))
    return out


def _fix_signs(u: np.ndarray) -> np.ndarray:
    """Make each column's first non-negligible component positive."""
    u = u.copy()
    for j in range(u.shape[1]):
        col = u[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            u[:, j] = -col
    return u


def sliding_subspace(
    features: np.ndarray, window: int, k: int
) -> list[ManifoldPoint]:
    """Dominant k-dimensional subspace of each mean-centered sliding window.

    The sign convention makes the representative deterministic regardless of
    the SVD's sign choices.
    """
    n, dim = features.shape
    if not 1 <= k < dim:
        raise ValueError("need 1 <= k < feature dimension")
    if window < k:
        raise ValueError("window must be >= k")
    if n < window:
        raise ValueError(f"need at least {window} frames, got {n}")
    out = []
    for j in range(n - window + 1):
        seg = features[j : j + window].T
        centered = seg - seg.mean(axis=1, keepdims=True)
        u, _, _ = np.linalg.svd(centered, full_matrices=False)
        out.append(ManifoldPoint(_fix_signs(u[:, :k]), "grassmann"))
    return out
