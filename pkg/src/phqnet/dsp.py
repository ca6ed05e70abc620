"""Frame-level acoustic features: power spectra, log-mel energies and MFCCs.

Also reads and writes 16-bit mono PCM WAV files.
"""

import wave
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionError, FormatError, InputError, ParameterError

LOG_FLOOR = 1e-10
EXPECTED_RATE = 16000


@dataclass(frozen=True, eq=False)
class AudioClip:
    samples: np.ndarray
    sample_rate: int = EXPECTED_RATE

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ParameterError(f"sample rate must be positive, got {self.sample_rate}")

    @property
    def duration(self):
        return len(self.samples) / self.sample_rate

    def slice(self, start, stop):
        """Samples in ``[start, stop)`` seconds."""
        a = max(int(round(start * self.sample_rate)), 0)
        b = min(int(round(stop * self.sample_rate)), len(self.samples))
        return AudioClip(self.samples[a:max(a, b)], self.sample_rate)


@dataclass(frozen=True)
class FrameSpec:
    frame_length: float = 0.025
    hop: float = 0.010
    window: str = "hann"
    fft_size: int = 512

    def samples(self, sample_rate):
        """``(frame_samples, hop_samples)`` at ``sample_rate``; validates the spec."""
        n = int(round(self.frame_length * sample_rate))
        h = int(round(self.hop * sample_rate))
        if not 0 < self.hop <= self.frame_length or h < 1:
            raise ParameterError(f"need 0 < hop <= frame_length, got {self.hop}, {self.frame_length}")
        if self.fft_size & (self.fft_size - 1) or self.fft_size < n:
            raise ParameterError(f"fft_size {self.fft_size} must be a power of two >= {n}")
        return n, h


def window(name, n):
    """Periodic tapering window of length ``n``."""
    k = np.arange(n)
    if name == "hann":
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * k / n)
    if name == "hamming":
        return 0.54 - 0.46 * np.cos(2.0 * np.pi * k / n)
    if name in ("rect", "rectangular", "none"):
        return np.ones(n)
    raise ParameterError(f"unknown window {name!r}")


def frame_count(n_samples, frame_samples, hop_samples):
    if n_samples < frame_samples:
        return 0
    return 1 + (n_samples - frame_samples) // hop_samples


def frames(clip, spec):
    """Windowed frames ``[n_frames, frame_samples]`` (float64)."""
    n, h = spec.samples(clip.sample_rate)
    x = np.asarray(clip.samples, dtype=np.float64)
    if frame_count(len(x), n, h) == 0:
        raise InputError(f"clip of {len(x)} samples is shorter than one {n}-sample frame")
    view = np.lib.stride_tricks.sliding_window_view(x, n)[::h]
    return view * window(spec.window, n)


def stft_power(clip, spec=FrameSpec()):
    """Per-frame power spectrum ``|FFT|^2``, shape ``[frames, fft_size//2 + 1]``."""
    spectrum = np.fft.rfft(frames(clip, spec), n=spec.fft_size, axis=1)
    return spectrum.real**2 + spectrum.imag**2


def hz_to_mel(f):
    """HTK mel scale."""
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise ParameterError("frequency must be non-negative")
    out = 2595.0 * np.log10(1.0 + f / 700.0)
    return float(out) if out.ndim == 0 else out


def mel_to_hz(m):
    m = np.asarray(m, dtype=np.float64)
    out = 700.0 * (10.0 ** (m / 2595.0) - 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class MelBank:
    n_filters: int
    low_hz: float
    high_hz: float
    fft_size: int
    sample_rate: int
    centers_hz: np.ndarray
    weights: np.ndarray  # [n_filters, fft_size // 2 + 1]


@lru_cache(maxsize=16)
def mel_filterbank(n_filters=80, fft_size=512, sample_rate=EXPECTED_RATE, low_hz=0.0, high_hz=None):
    """Triangular filters equally spaced on the mel scale, unit peak height.

    Triangles are evaluated at the exact FFT bin frequencies rather than
    snapped to bins, so narrow low-frequency filters never come out empty.
    """
    high_hz = sample_rate / 2 if high_hz is None else high_hz
    if n_filters < 1 or not 0 <= low_hz < high_hz <= sample_rate / 2:
        raise ParameterError(f"bad mel band {low_hz}-{high_hz} Hz for {n_filters} filters")
    edges = mel_to_hz(np.linspace(hz_to_mel(low_hz), hz_to_mel(high_hz), n_filters + 2))
    bins = np.arange(fft_size // 2 + 1) * sample_rate / fft_size
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rise = (bins[None, :] - lo) / (mid - lo)
    fall = (hi - bins[None, :]) / (hi - mid)
    w = np.maximum(0.0, np.minimum(rise, fall))
    w.setflags(write=False)
    centers = edges[1:-1].copy()
    centers.setflags(write=False)
    return MelBank(n_filters, float(low_hz), float(high_hz), fft_size, sample_rate, centers, w)


def apply_filterbank(power, bank):
    if power.shape[-1] != bank.weights.shape[1]:
        raise DimensionError(f"power has {power.shape[-1]} bins, bank expects {bank.weights.shape[1]}")
    return power @ bank.weights.T


def log_mel(clip, spec=FrameSpec(), bank=None):
    """``log(mel_energies + 1e-10)``, shape ``[frames, n_filters]``."""
    if bank is None:
        bank = mel_filterbank(80, spec.fft_size, clip.sample_rate)
    if bank.fft_size != spec.fft_size:
        raise ParameterError(f"bank built for fft_size {bank.fft_size}, spec uses {spec.fft_size}")
    return np.log(apply_filterbank(stft_power(clip, spec), bank) + LOG_FLOOR)


@lru_cache(maxsize=16)
def dct_matrix(n_in, n_out=None):
    """Orthonormal DCT-II basis, rows are coefficients: ``[n_out, n_in]``."""
    n_out = n_in if n_out is None else n_out
    k = np.arange(n_out)[:, None]
    n = np.arange(n_in)[None, :]
    m = np.cos(np.pi * k * (2 * n + 1) / (2 * n_in)) * np.sqrt(2.0 / n_in)
    m[0] /= np.sqrt(2.0)
    m.setflags(write=False)
    return m


def mfcc(logmel, n_coeffs=13):
    """DCT-II of log-mel frames along the channel axis, first ``n_coeffs`` kept."""
    logmel = np.asarray(logmel)
    channels = logmel.shape[-1]
    if not 1 <= n_coeffs <= channels:
        raise ParameterError(f"n_coeffs={n_coeffs} must be in [1, {channels}]")
    return logmel @ dct_matrix(channels, n_coeffs).T


def read_wav(path, resample=False, target_rate=EXPECTED_RATE):
    """Load a 16-bit mono PCM WAV as floats in [-1, 1)."""
    try:
        with wave.open(str(path), "rb") as w:
            channels, width, rate = w.getnchannels(), w.getsampwidth(), w.getframerate()
            raw = w.readframes(w.getnframes())
    except wave.Error as exc:
        raise FormatError(f"not a PCM WAV file ({exc})", path=path) from exc
    if channels != 1 or width != 2:
        raise FormatError(f"expected 16-bit mono, got {channels} channel(s) x {8 * width} bit", path=path)
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    if rate != target_rate:
        if not resample:
            raise FormatError(f"sample rate {rate} Hz; expected {target_rate} (enable resampling)", path=path)
        samples = resample_linear(samples, rate, target_rate)
        rate = target_rate
    return AudioClip(samples, rate)


def resample_linear(samples, rate, target_rate):
    n_out = int(round(len(samples) * target_rate / rate))
    t_out = np.arange(n_out) / target_rate
    t_in = np.arange(len(samples)) / rate
    return np.interp(t_out, t_in, samples)


def write_wav(path, clip):
    pcm = np.clip(np.round(np.asarray(clip.samples) * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(clip.sample_rate))
        w.writeframes(pcm.tobytes())
