# analysis/awgn_sim.py

"""
AWGN channel model and the Monte-Carlo harness built on it: frame/symbol error
rate runs, genie-aided reliability estimation and frozen-set selection.

Randomness comes from counter-based streams. Trials are cut into blocks of
`simulation.trial_block` frames; block b of stream s draws from
SeedSequence(seed, spawn_key=(s, b)). Block boundaries do not depend on the
worker count, so every report is a pure function of (seed, trials, config).
"""

import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

import numpy as np
from scipy import stats

from ..core.exceptions import SignalSetError, SimulationError
from ..core.polar_codec import CodeConfig, FROZEN_VALUE, SCDecoder, polar_encode
from ..core.signal_sets import SignalSet
from ..utils.batch_processor import BatchProcessor
from ..utils.config_manager import ConfigManager

import logging
logger = logging.getLogger(__name__)

STREAM_FER = 1
STREAM_RELIABILITY = 2
# Upper bound on B * N * q likelihood entries decoded at once
DECODE_CHUNK_ENTRIES = 1 << 21


@dataclass(frozen=True)
class NoiseModel:
    """Complex AWGN at a given Es/N0; sigma2 = N0 in joule per 2 dimensions."""
    es: float
    snr_db: float

    def __post_init__(self):
        if not self.es > 0:
            raise SimulationError(f"Signal energy must be positive, got {self.es}")
        if not math.isfinite(self.snr_db):
            raise SimulationError(f"SNR must be finite, got {self.snr_db}")

    @property
    def snr_linear(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    @property
    def sigma2(self) -> float:
        return self.es / self.snr_linear


def trial_stream(seed: int, stream_id: int, block: int) -> np.random.Generator:
    """Independent generator for one trial block of one stream."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream_id), int(block))))


def modulate(x: Any, sset: SignalSet) -> np.ndarray:
    """Natural mapping x_i -> s_{x_i}; keeps the shape of x."""
    symbols = np.asarray(x, dtype=np.int64)
    if symbols.size and (symbols.min() < 0 or symbols.max() >= sset.q):
        raise SignalSetError(f"Symbols must lie in 0..{sset.q - 1} for '{sset.label}'")
    return sset.points[symbols]


def add_noise(s: Any, nm: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    """Add circular complex Gaussian noise with variance sigma2/2 per real dimension."""
    s = np.asarray(s, dtype=np.complex128)
    scale = math.sqrt(nm.sigma2 / 2.0)
    noise = rng.standard_normal(s.shape) + 1j * rng.standard_normal(s.shape)
    return s + scale * noise


def channel_likelihoods(y: Any, sset: SignalSet, nm: NoiseModel, floor: Optional[float] = None) -> np.ndarray:
    """
    Normalized likelihood vectors, proportional to exp(-|y - s_x|^2 / sigma2).

    The smallest distance is subtracted before exponentiating and entries are
    floored so no vector can be all zero.

    Returns:
        Array of shape y.shape + (q,)
    """
    if floor is None:
        floor = float(ConfigManager().get_simulation_setting("likelihood_floor"))
    y = np.asarray(y, dtype=np.complex128)
    d2 = np.abs(y[..., None] - sset.points) ** 2
    d2 -= d2.min(axis=-1, keepdims=True) if d2.size else 0.0
    lik = np.maximum(np.exp(-d2 / nm.sigma2), floor)
    return lik / lik.sum(axis=-1, keepdims=True)


def binomial_interval(errors: int, trials: int, level: float = 0.95, exact_below: int = 10) -> Tuple[float, float, float]:
    """
    Confidence interval for an error rate.

    Uses the normal approximation, switched to the exact Clopper-Pearson
    interval when fewer than `exact_below` errors were seen.

    Returns:
        (half_width, low, high); half_width is the larger side for exact intervals
    """
    if trials <= 0:
        raise SimulationError("Confidence interval needs at least one trial")
    p = errors / trials
    alpha = 1.0 - level
    if errors < exact_below:
        low = 0.0 if errors == 0 else float(stats.beta.ppf(alpha / 2, errors, trials - errors + 1))
        high = 1.0 if errors == trials else float(stats.beta.ppf(1 - alpha / 2, errors + 1, trials - errors))
        return max(p - low, high - p), low, high
    z = float(stats.norm.ppf(1 - alpha / 2))
    half = z * math.sqrt(p * (1 - p) / trials)
    return half, max(0.0, p - half), min(1.0, p + half)


@dataclass
class SimulationReport:
    """Frame and symbol error counts of one run_fer call."""
    config: Dict[str, Any]
    set_label: str
    snr_db: float
    sigma2: float
    trials: int
    frame_errors: int
    symbol_errors: int
    info_symbols: int
    seed: int
    per_index_symbol_errors: List[int]
    ci_level: float = 0.95
    exact_ci_below: int = 10
    wall_time_seconds: float = field(default=0.0, compare=False)

    @property
    def fer(self) -> float:
        return self.frame_errors / self.trials

    @property
    def ser(self) -> float:
        total = self.trials * self.info_symbols
        return self.symbol_errors / total if total else 0.0

    @property
    def fer_ci(self) -> float:
        return binomial_interval(self.frame_errors, self.trials, self.ci_level, self.exact_ci_below)[0]

    @property
    def ser_ci(self) -> float:
        total = self.trials * self.info_symbols
        if not total:
            return 0.0
        return binomial_interval(self.symbol_errors, total, self.ci_level, self.exact_ci_below)[0]

    def index_error_rates(self) -> np.ndarray:
        """Per-index symbol error rate over all trials (frozen indices are always zero)."""
        return np.asarray(self.per_index_symbol_errors, dtype=np.float64) / self.trials

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "set": self.set_label,
            "snr_db": self.snr_db,
            "sigma2": self.sigma2,
            "trials": self.trials,
            "frameErrors": self.frame_errors,
            "symbolErrors": self.symbol_errors,
            "fer": self.fer,
            "ser": self.ser,
            "ferCi": self.fer_ci,
            "serCi": self.ser_ci,
            "ciLevel": self.ci_level,
            "seed": self.seed,
            "wallTimeSeconds": self.wall_time_seconds,
            "perIndexSymbolErrors": list(self.per_index_symbol_errors),
        }


@dataclass
class ReliabilityProfile:
    """Per-index genie-aided symbol error estimates."""
    estimates: np.ndarray
    trials: int
    snr_db: float
    set_label: str = ""
    schedule: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.estimates = np.asarray(self.estimates, dtype=np.float64)
        if self.estimates.ndim != 1:
            raise SimulationError("Reliability estimates must be a 1-D sequence")
        if self.estimates.size and (self.estimates.min() < 0 or self.estimates.max() > 1):
            raise SimulationError("Reliability estimates must lie in [0, 1]")

    @property
    def N(self) -> int:
        return int(self.estimates.size)

    def rows(self) -> List[Tuple[int, float]]:
        return [(i, float(e)) for i, e in enumerate(self.estimates)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.N,
            "trials": self.trials,
            "snr_db": self.snr_db,
            "set": self.set_label,
            "schedule": list(self.schedule),
            "estimates": self.estimates.tolist(),
        }


def _block_sizes(trials: int, block_size: int) -> List[Tuple[int, int]]:
    return [(b, min(block_size, trials - start)) for b, start in enumerate(range(0, trials, block_size))]


def _decode_in_chunks(decoder: SCDecoder, L: np.ndarray, truth: Optional[np.ndarray] = None) -> np.ndarray:
    B, N, q = L.shape
    step = max(1, DECODE_CHUNK_ENTRIES // (N * q))
    parts = []
    for i in range(0, B, step):
        if truth is None:
            parts.append(decoder.decode(L[i:i + step])[0])
        else:
            parts.append(decoder.decode_genie(L[i:i + step], truth[i:i + step]))
    return np.concatenate(parts, axis=0)


def _transmit(u: np.ndarray, cfg: CodeConfig, sset: SignalSet, nm: NoiseModel,
              rng: np.random.Generator, floor: float) -> np.ndarray:
    x = polar_encode(u, cfg)
    y = add_noise(modulate(x, sset), nm, rng)
    return channel_likelihoods(y, sset, nm, floor)


def _fer_block(block: Tuple[int, int], cfg: CodeConfig, sset: SignalSet, nm: NoiseModel,
               seed: int, floor: float) -> Tuple[int, int, np.ndarray]:
    index, size = block
    rng = trial_stream(seed, STREAM_FER, index)
    u = rng.integers(0, cfg.q, size=(size, cfg.N), dtype=np.int64)
    u[:, cfg.frozen_mask()] = FROZEN_VALUE
    L = _transmit(u, cfg, sset, nm, rng, floor)
    u_hat = _decode_in_chunks(SCDecoder(cfg), L)
    errors = u_hat != u
    info = errors[:, cfg.info_indices]
    return int(info.any(axis=1).sum()), int(info.sum()), errors.sum(axis=0)


def _genie_block(block: Tuple[int, int], cfg: CodeConfig, sset: SignalSet, nm: NoiseModel,
                 seed: int, floor: float) -> np.ndarray:
    index, size = block
    rng = trial_stream(seed, STREAM_RELIABILITY, index)
    u = rng.integers(0, cfg.q, size=(size, cfg.N), dtype=np.int64)
    L = _transmit(u, cfg, sset, nm, rng, floor)
    return _decode_in_chunks(SCDecoder(cfg), L, truth=u).sum(axis=0)


def _check_run(cfg: CodeConfig, sset: SignalSet, trials: int) -> None:
    if int(trials) < 1:
        raise SimulationError(f"Simulation needs at least one trial, got {trials}")
    if sset.q != cfg.q:
        raise SimulationError(f"Signal set '{sset.label}' has q={sset.q}, code has q={cfg.q}")


def _resolve_seed(seed: Optional[int]) -> int:
    return int(ConfigManager().get_simulation_setting("default_seed") if seed is None else seed)


def run_fer(cfg: CodeConfig, sset: SignalSet, nm: NoiseModel, trials: int, seed: Optional[int] = None,
            max_workers: Optional[int] = None, show_progress: bool = False) -> SimulationReport:
    """
    Monte-Carlo frame error rate under SC decoding.

    Information symbols are uniform, frozen symbols are 0. A frame error is any
    mismatch on an information index.

    Args:
        cfg: Code configuration with its frozen set
        sset: Signal set used by the modulator
        nm: Noise model
        trials: Number of frames (>= 1)
        seed: Master seed (defaults to simulation.default_seed)
        max_workers: Worker threads over trial blocks; does not change the result
    Returns:
        SimulationReport
    """
    _check_run(cfg, sset, trials)
    config = ConfigManager()
    seed = _resolve_seed(seed)
    block_size = int(config.get_simulation_setting("trial_block"))
    floor = float(config.get_simulation_setting("likelihood_floor"))
    blocks = _block_sizes(int(trials), block_size)

    logger.info(f"FER run: N={cfg.N}, K={cfg.K}, q={cfg.q}, stages={cfg.schedule.names}, "
                f"snr={nm.snr_db} dB, trials={trials}, seed={seed}")
    start = time.time()
    processor = BatchProcessor(max_workers=max_workers, show_progress=show_progress, strict=True)
    results = processor.process_items(blocks, _fer_block, cfg=cfg, sset=sset, nm=nm, seed=seed, floor=floor)

    per_index = np.zeros(cfg.N, dtype=np.int64)
    frame_errors = symbol_errors = 0
    for fe, se, idx in results:
        frame_errors += fe
        symbol_errors += se
        per_index += idx

    report = SimulationReport(
        config=cfg.to_dict(), set_label=sset.label, snr_db=nm.snr_db, sigma2=nm.sigma2,
        trials=int(trials), frame_errors=frame_errors, symbol_errors=symbol_errors,
        info_symbols=cfg.K, seed=seed, per_index_symbol_errors=per_index.tolist(),
        ci_level=float(config.get_simulation_setting("ci_level")),
        exact_ci_below=int(config.get_simulation_setting("exact_ci_below")),
        wall_time_seconds=time.time() - start,
    )
    logger.info(f"snr={nm.snr_db} dB: fer={report.fer:.3e} (+/-{report.fer_ci:.1e}), ser={report.ser:.3e}, "
                f"{report.wall_time_seconds:.1f}s")
    return report


def estimate_reliabilities(cfg: CodeConfig, sset: SignalSet, nm: NoiseModel, trials: int,
                           seed: Optional[int] = None, max_workers: Optional[int] = None,
                           show_progress: bool = False) -> ReliabilityProfile:
    """
    Per-index genie-aided symbol error frequencies over uniformly random inputs.
    Any frozen set on cfg is ignored.
    """
    _check_run(cfg, sset, trials)
    if cfg.frozen:
        logger.debug(f"Ignoring {len(cfg.frozen)} frozen indices for reliability estimation")
    config = ConfigManager()
    seed = _resolve_seed(seed)
    block_size = int(config.get_simulation_setting("trial_block"))
    floor = float(config.get_simulation_setting("likelihood_floor"))
    blocks = _block_sizes(int(trials), block_size)

    logger.info(f"Reliability estimation: N={cfg.N}, q={cfg.q}, stages={cfg.schedule.names}, "
                f"snr={nm.snr_db} dB, trials={trials}, seed={seed}")
    processor = BatchProcessor(max_workers=max_workers, show_progress=show_progress, strict=True)
    counts = processor.process_items(blocks, _genie_block, cfg=cfg, sset=sset, nm=nm, seed=seed, floor=floor)
    totals = np.sum(counts, axis=0)
    return ReliabilityProfile(estimates=totals / int(trials), trials=int(trials), snr_db=nm.snr_db,
                              set_label=sset.label, schedule=cfg.schedule.names)


def select_frozen_set(profile: ReliabilityProfile, K: int) -> FrozenSet[int]:
    """Freeze the N-K least reliable indices; on equal estimates the larger index is frozen first."""
    N = profile.N
    if not 0 <= int(K) <= N:
        raise SimulationError(f"Information size K must lie in 0..{N}, got {K}")
    order = sorted(range(N), key=lambda i: (-profile.estimates[i], -i))
    return frozenset(order[:N - int(K)])


def info_symbols_for_rate(N: int, q: int, bits_per_use: float = 1.0) -> int:
    """Largest K with K*log2(q)/N <= bits_per_use."""
    if q < 2:
        raise SimulationError(f"Alphabet size must be >= 2, got {q}")
    bits = math.log2(q)
    K = int(math.floor(N * bits_per_use / bits + 1e-12))
    return min(N, K)


def unpolarized_count(profile: ReliabilityProfile, low: Optional[float] = None, high: Optional[float] = None) -> int:
    """Number of indices whose estimate lies strictly inside (low, high)."""
    if low is None or high is None:
        window = ConfigManager().get_polarization_window()
        low = window[0] if low is None else low
        high = window[1] if high is None else high
    est = profile.estimates
    return int(np.count_nonzero((est > low) & (est < high)))


def sorted_profile(profile: ReliabilityProfile) -> np.ndarray:
    """Estimates sorted from most to least reliable."""
    return np.sort(profile.estimates)


def profile_distance(a: ReliabilityProfile, b: ReliabilityProfile) -> float:
    """Largest gap between two sorted profiles."""
    if a.N != b.N:
        raise SimulationError(f"Profiles have different lengths ({a.N} vs {b.N})")
    return float(np.max(np.abs(sorted_profile(a) - sorted_profile(b)))) if a.N else 0.0
