# core/polar_codec.py

"""
Core module for the length-N non-binary polar encoder and the q-ary
successive-cancellation (SC) decoder.

Stage t (1-based, stage 1 next to the inputs) pairs position p of the first
half of every block of 2^t positions with p + 2^(t-1): the first half becomes
f_t(first, second), the second half is passed through. Stage n is the channel
stage. Indices are in natural order; there is no bit-reversal.

The decoder works in the probability domain and renormalizes every node.
All operations accept a single frame (shape (N,) / (N, q)) or a batch
(shape (B, N) / (B, N, q)); a batch is decoded frame-wise independently.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, Optional, Tuple

import numpy as np

from .exceptions import CodecError, DecodingUnderflowError
from .kernels import Kernel, KernelSchedule, builtin_kernel, invert_u1

import logging
logger = logging.getLogger(__name__)

FROZEN_VALUE = 0
NORMALIZATION_TOLERANCE = 1e-9


def _is_power_of_two(value: int) -> bool:
    return value >= 1 and (value & (value - 1)) == 0


@dataclass(frozen=True)
class CodeConfig:
    """Alphabet size, per-stage kernel schedule and frozen index set of a code."""
    q: int
    schedule: KernelSchedule
    frozen: FrozenSet[int] = field(default_factory=frozenset)
    block_length: Optional[int] = None

    def __post_init__(self):
        if self.schedule.q != self.q:
            raise CodecError(f"Schedule alphabet q={self.schedule.q} does not match code q={self.q}")
        N = 2 ** self.schedule.n
        if self.block_length is not None:
            if not _is_power_of_two(int(self.block_length)):
                raise CodecError(f"Block length must be a power of two, got {self.block_length}")
            if int(self.block_length) != N:
                raise CodecError(f"Schedule has {self.schedule.n} stages but N={self.block_length} needs {int(self.block_length).bit_length() - 1}")
        object.__setattr__(self, "block_length", N)
        frozen = frozenset(int(i) for i in self.frozen)
        bad = sorted(i for i in frozen if not 0 <= i < N)
        if bad:
            raise CodecError(f"Frozen indices out of range 0..{N - 1}: {bad[:10]}")
        object.__setattr__(self, "frozen", frozen)

    @property
    def N(self) -> int:
        return int(self.block_length)

    @property
    def n(self) -> int:
        return self.schedule.n

    @property
    def K(self) -> int:
        return self.N - len(self.frozen)

    @property
    def info_indices(self) -> np.ndarray:
        return np.array([i for i in range(self.N) if i not in self.frozen], dtype=np.int64)

    def frozen_mask(self) -> np.ndarray:
        mask = np.zeros(self.N, dtype=bool)
        mask[np.fromiter(sorted(self.frozen), dtype=np.int64, count=len(self.frozen))] = True
        return mask

    def with_frozen(self, frozen: Iterable[int]) -> "CodeConfig":
        return CodeConfig(q=self.q, schedule=self.schedule, frozen=frozenset(frozen))

    def to_dict(self) -> Dict[str, Any]:
        return {"q": self.q, "N": self.N, "stages": self.schedule.names, "frozen": sorted(self.frozen)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CodeConfig":
        """
        Build from {"q", "N", "stages", "frozen"}. Stages are kernel names or kernel
        JSON objects; a single stage entry is repeated over all n stages.
        """
        try:
            q = int(data["q"])
            N = int(data["N"])
            stages = list(data["stages"])
            frozen = [int(i) for i in data.get("frozen", [])]
        except (KeyError, TypeError, ValueError) as e:
            raise CodecError(f"Malformed code configuration JSON: {e}") from e
        if not _is_power_of_two(N) or N < 2:
            raise CodecError(f"Block length must be a power of two >= 2, got {N}")
        n = N.bit_length() - 1
        if len(stages) == 1:
            stages = stages * n
        if len(stages) != n:
            raise CodecError(f"Code with N={N} needs {n} stage kernels, got {len(stages)}")
        schedule = KernelSchedule(tuple(_stage_kernel(s, q) for s in stages))
        return cls(q=q, schedule=schedule, frozen=frozenset(frozen), block_length=N)


def _stage_kernel(stage: Any, q: int) -> Kernel:
    if isinstance(stage, Kernel):
        return stage
    if isinstance(stage, dict):
        return Kernel.from_dict(stage)
    return builtin_kernel(str(stage), q)


def _as_symbol_batch(u: Any, cfg: CodeConfig, what: str) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(u)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or arr.shape[1] != cfg.N:
        raise CodecError(f"{what} must have length N={cfg.N}, got shape {np.shape(u)}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise CodecError(f"{what} must hold integer symbols")
    arr = arr.astype(np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= cfg.q):
        raise CodecError(f"{what} symbols must lie in 0..{cfg.q - 1}")
    return arr, single


def polar_encode(u: Any, cfg: CodeConfig) -> np.ndarray:
    """
    Apply the n butterfly stages input-to-channel.

    Args:
        u: Length-N symbols, or a (B, N) batch
        cfg: Code configuration (only q and the schedule are used)
    Returns:
        Codeword(s) with the same shape as u
    Raises:
        CodecError: wrong length or out-of-range symbols
    """
    x, single = _as_symbol_batch(u, cfg, "Input sequence")
    x = x.copy()
    B, N = x.shape
    for t, kernel in enumerate(cfg.schedule.stages, start=1):
        half = 1 << (t - 1)
        view = x.reshape(B, N // (2 * half), 2, half)
        view[:, :, 0, :] = kernel.table[view[:, :, 0, :], view[:, :, 1, :]]
    return x[0] if single else x


def polar_invert(x: Any, cfg: CodeConfig) -> np.ndarray:
    """Inverse of polar_encode, undoing the stages channel-to-input via the kernel column inverses."""
    u, single = _as_symbol_batch(x, cfg, "Codeword")
    u = u.copy()
    B, N = u.shape
    for t in range(cfg.n, 0, -1):
        inv = invert_u1(cfg.schedule.stages[t - 1])
        half = 1 << (t - 1)
        view = u.reshape(B, N // (2 * half), 2, half)
        view[:, :, 0, :] = inv[view[:, :, 0, :], view[:, :, 1, :]]
    return u[0] if single else u


class SCDecoder:
    """
    q-ary successive-cancellation decoder for one code configuration.

    A node at (level, offset) covers 2^level consecutive input indices starting at
    offset; the root is (n, 0) and leaf i is (0, i).
    """

    def __init__(self, cfg: CodeConfig, check_normalization: bool = False):
        self.cfg = cfg
        self.check_normalization = check_normalization
        self._frozen_mask = cfg.frozen_mask()
        self._tables = [k.table for k in cfg.schedule.stages]

    def decode(self, likelihoods: Any) -> Tuple[np.ndarray, np.ndarray]:
        """
        Decode channel likelihoods.

        Returns:
            (u_hat, posteriors): decisions with shape (N,) or (B, N), and the
            normalized per-index posteriors with shape (N, q) or (B, N, q)
        """
        L, single = self._prepare(likelihoods)
        u_hat, post = self._run(L, truth=None)
        return (u_hat[0], post[0]) if single else (u_hat, post)

    def decode_genie(self, likelihoods: Any, true_u: Any) -> np.ndarray:
        """
        Genie-aided decoding: each decision is made from the posterior but the
        recursion continues with the true symbol. Frozen indices are treated
        like information indices.

        Returns:
            Boolean per-index error flags, shape (N,) or (B, N)
        """
        L, single = self._prepare(likelihoods)
        truth, _ = _as_symbol_batch(true_u, self.cfg, "True input sequence")
        if truth.shape[0] != L.shape[0]:
            raise CodecError(f"Got {truth.shape[0]} true sequences for {L.shape[0]} likelihood frames")
        decisions, _ = self._run(L, truth=truth)
        flags = decisions != truth
        return flags[0] if single else flags

    def _prepare(self, likelihoods: Any) -> Tuple[np.ndarray, bool]:
        L = np.asarray(likelihoods, dtype=np.float64)
        single = L.ndim == 2
        if single:
            L = L[None]
        q, N = self.cfg.q, self.cfg.N
        if L.ndim != 3 or L.shape[1:] != (N, q):
            raise CodecError(f"Expected channel likelihoods of shape (N, q) = ({N}, {q}), got {np.shape(likelihoods)}")
        if np.isnan(L).any() or (L < 0).any():
            raise CodecError("Channel likelihoods must be non-negative and not NaN")
        sums = L.sum(axis=-1, keepdims=True)
        zero = np.argwhere(~(sums[..., 0] > 0))
        if zero.size:
            raise DecodingUnderflowError(self.cfg.n, int(zero[0][1]),
                                         f"Channel likelihood vector at position {int(zero[0][1])} is all zero")
        return L / sums, single

    def _run(self, L: np.ndarray, truth: Optional[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
        B, N, q = L.shape
        decisions = np.zeros((B, N), dtype=np.int64)
        posteriors = np.zeros((B, N, q), dtype=np.float64)
        self._decode_node(L, self.cfg.n, 0, truth, decisions, posteriors)
        return decisions, posteriors

    def _normalize(self, P: np.ndarray, level: int, offset: int) -> np.ndarray:
        sums = P.sum(axis=-1, keepdims=True)
        if not np.all(sums > 0) or not np.all(np.isfinite(sums)):
            raise DecodingUnderflowError(level, offset)
        P = P / sums
        if self.check_normalization and not np.allclose(P.sum(axis=-1), 1.0, atol=NORMALIZATION_TOLERANCE):
            raise CodecError(f"Node ({level}, {offset}) lost normalization")
        return P

    def _decode_node(self, L: np.ndarray, level: int, offset: int, truth: Optional[np.ndarray],
                     decisions: np.ndarray, posteriors: np.ndarray) -> np.ndarray:
        """Decode the subtree rooted at (level, offset); returns its re-encoded codeword (B, 2^level)."""
        if level == 0:
            P = self._normalize(L[:, 0, :], 0, offset)
            posteriors[:, offset, :] = P
            decided = np.argmax(P, axis=-1)
            decisions[:, offset] = decided
            if truth is not None:
                chosen = truth[:, offset]
            elif self._frozen_mask[offset]:
                chosen = np.full_like(decided, FROZEN_VALUE)
                decisions[:, offset] = FROZEN_VALUE
            else:
                chosen = decided
            return chosen[:, None]

        T = self._tables[level - 1]
        half = L.shape[1] // 2
        top, bottom = L[:, :half, :], L[:, half:, :]

        # first half: marginalize the second input over f(a, b)
        Pa = (top[..., T] * bottom[..., None, :]).sum(axis=-1)
        Pa = self._normalize(Pa, level - 1, offset)
        xa = self._decode_node(Pa, level - 1, offset, truth, decisions, posteriors)

        # second half: condition on the re-encoded first half
        Pb = np.take_along_axis(top, T[xa], axis=-1) * bottom
        Pb = self._normalize(Pb, level - 1, offset + half)
        xb = self._decode_node(Pb, level - 1, offset + half, truth, decisions, posteriors)

        return np.concatenate([T[xa, xb], xb], axis=1)


def polar_decode_sc(likelihoods: Any, cfg: CodeConfig) -> Tuple[np.ndarray, np.ndarray]:
    """SC-decode channel likelihoods under cfg; see SCDecoder.decode."""
    return SCDecoder(cfg).decode(likelihoods)


def polar_decode_genie(likelihoods: Any, cfg: CodeConfig, true_u: Any) -> np.ndarray:
    """Per-index genie-aided error flags; see SCDecoder.decode_genie."""
    return SCDecoder(cfg).decode_genie(likelihoods, true_u)
