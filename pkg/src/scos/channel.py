"""BPSK over the binary-input AWGN channel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def ebn0_to_sigma(ebn0_db: float, rate: float) -> float:
    """Noise standard deviation for unit-energy BPSK at the given E_b/N_0."""
    if not rate > 0:
        raise ValueError(f"rate must be positive, got {rate}")
    return float(np.sqrt(1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0))))


@dataclass(frozen=True)
class ChannelParams:
    ebn0_db: float
    rate: float
    seed: int = 0

    @property
    def sigma(self) -> float:
        return ebn0_to_sigma(self.ebn0_db, self.rate)


def frame_rng(seed: int, frame: int) -> np.random.Generator:
    """Independent substream for one frame, keyed by (master seed, frame index)."""
    return np.random.default_rng([int(seed), int(frame)])


def llr_from_noise(codeword: np.ndarray, sigma: float, z: np.ndarray) -> np.ndarray:
    y = 1.0 - 2.0 * np.asarray(codeword, dtype=np.float64) + sigma * np.asarray(z)
    return 2.0 * y / sigma ** 2


def transmit(codeword: np.ndarray, params: ChannelParams | float, rng: np.random.Generator) -> np.ndarray:
    """Channel LLRs 2y/sigma^2 for y = (1 - 2c) + sigma * z."""
    sigma = params.sigma if isinstance(params, ChannelParams) else float(params)
    z = rng.standard_normal(len(codeword))
    return llr_from_noise(codeword, sigma, z)
