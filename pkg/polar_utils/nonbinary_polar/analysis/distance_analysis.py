# analysis/distance_analysis.py

"""
Distance analysis of one polarization step over a 2-D signal set.

The step maps (u1, u2) to the pair of transmitted symbols (f(u1, u2), u2).
For a reference pair, the good synthetic channel (u2 given u1) competes
against every u2' != u2 with u1 fixed; the bad synthetic channel (u1 with u2
unknown) competes against every (u1', u2') with u1' != u1. Distances are the
Euclidean distances between the two transmitted 4-D signal pairs.

Also hosts the Q-function, the distance-spectrum union bound, the equidistant
minimum-distance bound and related checks.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import erfc

from ..core.exceptions import SpectrumError
from ..core.kernels import Kernel
from ..core.signal_sets import SignalSet, squared_distance_matrix, energy_sum, is_group_matched, make_psk
from ..utils.cache_manager import cached

import logging
logger = logging.getLogger(__name__)

GOOD = "good"
BAD = "bad"
DISTANCE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class DistanceSpectrum:
    """
    Competitor distances from one reference pair, binned with multiplicities.
    Distances are absolute (units of sqrt(joule)); at es = 1 they read in sqrt(E_s) units.
    """
    kind: str
    q: int
    entries: Tuple[Tuple[float, int], ...]
    es: float = 1.0
    uniform: bool = True
    worst_dmin: float = field(default=float("nan"))

    def __post_init__(self):
        if self.kind not in (GOOD, BAD):
            raise SpectrumError(f"Unknown spectrum kind '{self.kind}'")
        if not self.entries:
            raise SpectrumError("A distance spectrum needs at least one entry")
        distances = [d for d, _ in self.entries]
        if any(n < 1 for _, n in self.entries):
            raise SpectrumError("Spectrum multiplicities must be >= 1")
        if distances[0] <= 0 or any(b <= a for a, b in zip(distances, distances[1:])):
            raise SpectrumError(f"Spectrum distances must be positive and strictly increasing: {distances}")
        if math.isnan(self.worst_dmin):
            object.__setattr__(self, "worst_dmin", distances[0])

    @property
    def d_min(self) -> float:
        return self.entries[0][0]

    @property
    def kissing_number(self) -> int:
        return self.entries[0][1]

    @property
    def total_count(self) -> int:
        return sum(n for _, n in self.entries)

    @property
    def total_d(self) -> float:
        """Sum of N(d) d^2; for PSK good spectra this equals 2 * sum_k |s_k - s_0|^2."""
        return float(sum(n * d * d for d, n in self.entries))

    def to_dict(self, digits: Optional[int] = None) -> Dict[str, Any]:
        rnd = (lambda v: round(v, digits)) if digits is not None else (lambda v: v)
        return {
            "kind": self.kind,
            "entries": [{"d": rnd(d), "n": n} for d, n in self.entries],
            "uniform": self.uniform,
            "d_min": rnd(self.d_min),
            "worst_dmin": rnd(self.worst_dmin),
            "totalD": rnd(self.total_d),
        }

    def describe(self, digits: int = 3) -> str:
        return "{" + ", ".join(f"{d:.{digits}f}:{n}" for d, n in self.entries) + "}"


def _check_pair(kernel: Kernel, sset: SignalSet) -> None:
    if kernel.q != sset.q:
        raise SpectrumError(f"Kernel '{kernel.label}' has q={kernel.q} but signal set '{sset.label}' has q={sset.q}")


def bin_distances(squared: np.ndarray, tol: float = DISTANCE_TOLERANCE) -> Tuple[Tuple[float, int], ...]:
    """Group sorted distances that agree within tol into (distance, multiplicity) entries."""
    distances = np.sort(np.sqrt(np.asarray(squared, dtype=float).ravel()))
    entries: List[List[float]] = []
    for d in distances:
        if entries and abs(d - entries[-1][0]) <= tol:
            entries[-1][1] += 1
        else:
            entries.append([float(d), 1])
    return tuple((d, int(n)) for d, n in entries)


def _good_squared(kernel: Kernel, sset: SignalSet) -> np.ndarray:
    """d2[u1, u2, u2'] with the u2' == u2 diagonal removed -> shape (q, q, q-1)."""
    q = kernel.q
    d2 = squared_distance_matrix(sset)
    table = kernel.table
    full = d2[table[:, :, None], table[:, None, :]] + d2[None, :, :]
    mask = ~np.eye(q, dtype=bool)
    return full[:, mask].reshape(q, q, q - 1)


def _bad_squared(kernel: Kernel, sset: SignalSet) -> np.ndarray:
    """d2[u1, u2, competitor] over all (u1', u2') with u1' != u1 -> shape (q, q, q(q-1))."""
    q = kernel.q
    d2 = squared_distance_matrix(sset)
    table = kernel.table
    full = d2[table[:, :, None, None], table[None, None, :, :]] + d2[None, :, None, :]
    out = np.empty((q, q, q * (q - 1)))
    for u1 in range(q):
        others = np.delete(full[u1], u1, axis=1)         # (u2, u1', u2')
        out[u1] = others.reshape(q, q * (q - 1))
    return out


def _spectrum_from(kind: str, squared: np.ndarray, kernel: Kernel, sset: SignalSet,
                   reference: Tuple[int, int], tol: float) -> DistanceSpectrum:
    u1, u2 = reference
    if not (0 <= u1 < kernel.q and 0 <= u2 < kernel.q):
        raise SpectrumError(f"Reference pair {reference} out of range for q={kernel.q}")
    ref_sorted = np.sort(np.sqrt(squared[u1, u2]))
    all_sorted = np.sort(np.sqrt(squared), axis=-1)
    uniform = bool(np.all(np.abs(all_sorted - ref_sorted[None, None, :]) <= tol))
    if not uniform:
        logger.warning(f"{kind.capitalize()}-channel spectrum of kernel '{kernel.label}' over '{sset.label}' "
                       f"differs between reference pairs")
    return DistanceSpectrum(kind=kind, q=kernel.q, entries=bin_distances(squared[u1, u2], tol),
                            es=sset.es, uniform=uniform, worst_dmin=float(all_sorted[..., 0].min()))


@cached("spectra", key_func=lambda kernel, sset, reference=(0, 0), tol=DISTANCE_TOLERANCE:
        f"good:{kernel.fingerprint}:{sset.fingerprint}:{reference}:{tol}")
def good_channel_spectrum(kernel: Kernel, sset: SignalSet, reference: Tuple[int, int] = (0, 0),
                          tol: float = DISTANCE_TOLERANCE) -> DistanceSpectrum:
    """
    Good-channel spectrum: d^2 = |s_f(u1,u2) - s_f(u1,u2')|^2 + |s_u2 - s_u2'|^2 over u2' != u2.
    Uniformity across every reference pair is checked and reported in `uniform`.
    """
    _check_pair(kernel, sset)
    return _spectrum_from(GOOD, _good_squared(kernel, sset), kernel, sset, reference, tol)


@cached("spectra", key_func=lambda kernel, sset, reference=(0, 0), tol=DISTANCE_TOLERANCE:
        f"bad:{kernel.fingerprint}:{sset.fingerprint}:{reference}:{tol}")
def bad_channel_spectrum(kernel: Kernel, sset: SignalSet, reference: Tuple[int, int] = (0, 0),
                         tol: float = DISTANCE_TOLERANCE) -> DistanceSpectrum:
    """
    Bad-channel spectrum: d^2 = |s_f(u1,u2) - s_f(u1',u2')|^2 + |s_u2 - s_u2'|^2
    over all u1' != u1 and all u2' (q(q-1) competitors).
    """
    _check_pair(kernel, sset)
    return _spectrum_from(BAD, _bad_squared(kernel, sset), kernel, sset, reference, tol)


def reference_spectra(kernel: Kernel, sset: SignalSet, kind: str = GOOD,
                      tol: float = DISTANCE_TOLERANCE) -> Dict[Tuple[int, int], DistanceSpectrum]:
    """Spectra for every reference pair (u1, u2)."""
    _check_pair(kernel, sset)
    squared = _good_squared(kernel, sset) if kind == GOOD else _bad_squared(kernel, sset)
    q = kernel.q
    worst = float(np.sqrt(squared.min(axis=-1)).min())
    rows = np.sort(np.sqrt(squared), axis=-1)
    uniform = bool(np.all(np.abs(rows - rows[0, 0]) <= tol))
    out = {}
    for u1 in range(q):
        for u2 in range(q):
            out[(u1, u2)] = DistanceSpectrum(kind=kind, q=q, entries=bin_distances(squared[u1, u2], tol),
                                             es=sset.es, uniform=uniform, worst_dmin=worst)
    return out


def is_equidistant(spectrum: DistanceSpectrum, q: Optional[int] = None) -> bool:
    """
    True iff N(d_min) = q - 1 at every reference pair: the good spectrum has a
    single entry and does not change with the reference.
    """
    if spectrum.kind != GOOD:
        raise SpectrumError("Equidistance is defined on good-channel spectra only")
    q = spectrum.q if q is None else q
    return spectrum.uniform and spectrum.kissing_number == q - 1


def equidistant_dmin_bound(sset: SignalSet) -> float:
    """sqrt( 2/(q-1) * sum_{k=1..q-1} |s_k - s_0|^2 ), the largest achievable good-channel d_min."""
    return math.sqrt(2.0 * energy_sum(sset) / (sset.q - 1))


def psk_standard_dmin(q: int, es: float = 1.0) -> float:
    """Closed form 2*sqrt(2)*sin(pi/q)*sqrt(es) for the standard kernel over q-PSK."""
    return 2.0 * math.sqrt(2.0) * math.sin(math.pi / q) * math.sqrt(es)


def asymptotic_equidistant_dmin(q: int, es: float = 1.0) -> float:
    """Equidistant bound over q-PSK in closed form: sqrt(4q/(q-1) * es); tends to 2*sqrt(es)."""
    return math.sqrt(4.0 * q / (q - 1) * es)


def conservation_totals(kernel: Kernel, sset: SignalSet) -> np.ndarray:
    """Per reference pair, the sum of good-channel competitor d^2. Shape (q, q)."""
    _check_pair(kernel, sset)
    return _good_squared(kernel, sset).sum(axis=-1)


def conservation_check(kernel: Kernel, sset: SignalSet, tol: float = DISTANCE_TOLERANCE) -> bool:
    """
    True iff for every reference pair the good-channel squared distances sum to
    2 * sum_k |s_k - s_0|^2. Only guaranteed for group-matched sets; other sets
    are checked with a warning.
    """
    if not is_group_matched(sset):
        logger.warning(f"Signal set '{sset.label}' is not group-matched; distance conservation is not guaranteed")
    totals = conservation_totals(kernel, sset)
    expected = 2.0 * energy_sum(sset)
    ok = bool(np.all(np.abs(totals - expected) <= tol * max(1.0, expected)))
    logger.debug(f"Conservation for '{kernel.label}' over '{sset.label}': expected {expected:.12g}, "
                 f"observed range [{totals.min():.12g}, {totals.max():.12g}] -> {ok}")
    return ok


def q_function(x):
    """Gaussian tail probability Q(x) = 0.5 * erfc(x / sqrt(2)). Accepts scalars or arrays."""
    result = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(result) if np.ndim(result) == 0 else result


def union_bound(spectrum: DistanceSpectrum, snr: float, es: Optional[float] = None) -> float:
    """
    Distance-spectrum union bound on the symbol error probability:
    sum_d N(d) * Q( (d / sqrt(es)) * sqrt(snr / 2) ), with snr = E_s/N_0 linear.
    """
    if snr <= 0:
        raise SpectrumError(f"SNR must be positive (linear), got {snr}")
    es = spectrum.es if es is None else es
    scale = math.sqrt(snr / 2.0) / math.sqrt(es)
    return float(sum(n * q_function(d * scale) for d, n in spectrum.entries))


def db_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


def bound_curve(spectrum: DistanceSpectrum, snr_grid_db: Sequence[float]) -> List[Tuple[float, float]]:
    """(snr_db, union bound) rows over a dB grid."""
    return [(float(s), union_bound(spectrum, db_to_linear(s))) for s in snr_grid_db]


def asymptotic_equidistant_bound(q: int, snr: float) -> float:
    """(q-1) * Q(sqrt(2 snr)), the equidistant bound over q-PSK as q grows."""
    return (q - 1) * q_function(math.sqrt(2.0 * snr))


def jensen_gap(a: float, b: float) -> float:
    """Q(a) + Q(b) - 2 Q(sqrt((a^2 + b^2)/2)); positive for a != b, zero for a == b."""
    if a <= 0 or b <= 0:
        raise SpectrumError(f"jensen_gap needs positive arguments, got ({a}, {b})")
    return q_function(a) + q_function(b) - 2.0 * q_function(math.sqrt((a * a + b * b) / 2.0))


def bound_comparison_almost_equidistant(snr_grid_db: Iterable[float]) -> List[Dict[str, float]]:
    """
    Per SNR point, the 8-PSK almost-equidistant bound 6Q(2 sqrt(SNR/2)) + Q(2.83 sqrt(SNR/2))
    against the equidistant bound 7Q(2.14 sqrt(SNR/2)), using exact distances.
    """
    psk8 = make_psk(8)
    d_eq = equidistant_dmin_bound(psk8)
    d_far = 2.0 * math.sqrt(2.0)
    rows = []
    for snr_db in snr_grid_db:
        root = math.sqrt(db_to_linear(snr_db) / 2.0)
        almost = 6.0 * q_function(2.0 * root) + q_function(d_far * root)
        equi = 7.0 * q_function(d_eq * root)
        rows.append({"snr_db": float(snr_db), "almost_equidistant": almost,
                     "equidistant": equi, "ratio": almost / equi if equi > 0 else float("inf")})
    return rows


def summary_row(spectrum: DistanceSpectrum, digits: int = 3) -> str:
    """Summary cell: 'd_min 2.236, N(d) 4'."""
    counts = ",".join(str(n) for _, n in spectrum.entries)
    return f"d_min {spectrum.d_min:.{digits}f}, N(d) {counts}"
