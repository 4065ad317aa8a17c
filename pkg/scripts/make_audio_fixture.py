#!/usr/bin/env python3
"""Regenerate the bundled synthetic speech/noise WAV pair.

The repo cannot ship licensed speech corpora, so the audio pipeline is
exercised with a deterministic stand-in: a harmonic "speech" signal with
formant-shaped spectrum and syllabic amplitude modulation, and a stationary
low-frequency-heavy "street noise" track.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from manifold_cpd.audio import write_wav  # noqa: E402

RATE = 16000
SPEECH_SECONDS = 4.0
NOISE_SECONDS = 15.0
SEED = 20240917


def formant_envelope(freqs: np.ndarray) -> np.ndarray:
    env = 0.05 * np.ones_like(freqs)
    for center, width, gain in ((700, 130, 1.0), (1200, 160, 0.7), (2600, 250, 0.45)):
        env = env + gain * np.exp(-0.5 * ((freqs - center) / width) ** 2)
    return env


def make_speech(rng: np.random.Generator) -> np.ndarray:
    n = int(SPEECH_SECONDS * RATE)
    t = np.arange(n) / RATE
    f0 = 120.0 + 18.0 * np.sin(2 * np.pi * 0.6 * t) + 6.0 * np.sin(2 * np.pi * 2.3 * t)
    phase = 2 * np.pi * np.cumsum(f0) / RATE
    voiced = np.zeros(n)
    for h in range(1, 31):
        freq_h = h * 120.0
        if freq_h > 3800:
            break
        amp = formant_envelope(np.array([freq_h]))[0] / h**0.3
        voiced += amp * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
    # syllabic gating: ~3.5 Hz bursts with short gaps
    syllable = 0.5 * (1 + np.sign(np.sin(2 * np.pi * 3.5 * t + 0.4)))
    smooth = np.convolve(syllable, np.hanning(800) / np.hanning(800).sum(), mode="same")
    voiced *= 0.2 + 0.8 * smooth
    # fricative bursts in two of the gaps
    fric = rng.standard_normal(n)
    spectrum = np.fft.rfft(fric)
    freqs = np.fft.rfftfreq(n, 1 / RATE)
    spectrum[(freqs < 2800) | (freqs > 6500)] = 0
    fric = np.fft.irfft(spectrum, n)
    gate = np.zeros(n)
    for start_s in (1.1, 2.8):
        i0 = int(start_s * RATE)
        gate[i0 : i0 + int(0.12 * RATE)] = 1.0
    speech = voiced + 0.5 * fric * gate
    return speech / np.sqrt(np.mean(speech**2)) * 0.15


def make_noise(rng: np.random.Generator) -> np.ndarray:
    n = int(NOISE_SECONDS * RATE)
    white = rng.standard_normal(n)
    # one-pole lowpass for a low-frequency-heavy stationary floor
    low = np.empty(n)
    acc = 0.0
    coef = 0.985
    for i in range(n):
        acc = coef * acc + (1 - coef) * white[i]
        low[i] = acc
    low /= np.sqrt(np.mean(low**2))
    hiss = 0.18 * rng.standard_normal(n)
    hum = 0.12 * np.sin(2 * np.pi * 50.0 * np.arange(n) / RATE)
    noise = low + hiss + hum
    return noise / np.sqrt(np.mean(noise**2)) * 0.15


def main() -> None:
    out_dir = Path(__file__).resolve().parents[1] / "src" / "manifold_cpd" / "fixtures"
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)
    write_wav(out_dir / "speech.wav", RATE, make_speech(rng))
    write_wav(out_dir / "noise.wav", RATE, make_noise(rng))
    print(f"fixtures written to {out_dir}")


if __name__ == "__main__":
    main()
