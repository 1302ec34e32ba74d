# analysis/kernel_search.py

"""
Exhaustive search for permutation kernels f(u1, u2) = u1 + pi(u2) mod q.

Every row of such a kernel is the cyclic right-shift of row 0, so a candidate
is fully described by pi. Candidates are ranked by the good-channel spectrum
of their weakest reference pair: a larger minimum distance wins, then a
smaller multiplicity at it, then the next distance, and so on. Alternatively
the union bound at a fixed SNR can be minimised.
"""

import functools
import itertools
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.exceptions import SearchError, SpectrumError
from ..core.kernels import Kernel, kernel_from_permutation
from ..core.signal_sets import SignalSet, is_group_matched
from ..utils.batch_processor import BatchProcessor
from ..utils.config_manager import ConfigManager
from .distance_analysis import (
    DistanceSpectrum, GOOD, DISTANCE_TOLERANCE, _good_squared, bin_distances,
    db_to_linear, equidistant_dmin_bound, is_equidistant, union_bound,
)

import logging
logger = logging.getLogger(__name__)

OBJECTIVE_SPECTRUM = "spectrum"
OBJECTIVE_UNION_BOUND = "union_bound"
CANDIDATE_CHUNK = 128


def compare_spectra(a: DistanceSpectrum, b: DistanceSpectrum, tol: float = DISTANCE_TOLERANCE) -> int:
    """
    Lexicographic comparison on (d_1, -N(d_1), d_2, -N(d_2), ...).

    Returns:
        1 if a is better, -1 if b is better, 0 if they are equal within tol
    Raises:
        SpectrumError: mismatched q or non-good spectra
    """
    if a.q != b.q:
        raise SpectrumError(f"Cannot compare spectra of different alphabets (q={a.q} vs q={b.q})")
    if a.kind != GOOD or b.kind != GOOD:
        raise SpectrumError("Spectrum ordering is defined on good-channel spectra")
    for (da, na), (db, nb) in zip(a.entries, b.entries):
        if abs(da - db) > tol:
            return 1 if da > db else -1
        if na != nb:
            return 1 if na < nb else -1
    return 0


@dataclass
class SearchReport:
    """Outcome of an exhaustive permutation-kernel search."""
    q: int
    set_label: str
    objective: str
    best_permutations: List[Tuple[int, ...]]
    best_spectrum: DistanceSpectrum
    equidistant_found: bool
    search_space_size: int
    dmin_bound: float
    full_space: bool
    objective_snr_db: Optional[float] = None
    best_union_bound: Optional[float] = None
    extras: Dict[str, Any] = field(default_factory=dict)

    def best_kernels(self) -> List[Kernel]:
        return [kernel_from_permutation(self.q, pi) for pi in self.best_permutations]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "q": self.q,
            "set": self.set_label,
            "objective": self.objective,
            "objective_snr_db": self.objective_snr_db,
            "full_space": self.full_space,
            "searchSpaceSize": self.search_space_size,
            "bestPermutations": [list(p) for p in self.best_permutations],
            "bestSpectrum": self.best_spectrum.to_dict(),
            "bestUnionBound": self.best_union_bound,
            "equidistantFound": self.equidistant_found,
            "dminBound": self.dmin_bound,
            **self.extras,
        }


def weakest_reference_spectrum(kernel: Kernel, sset: SignalSet, tol: float = DISTANCE_TOLERANCE) -> DistanceSpectrum:
    """
    The worst good-channel spectrum over all reference pairs under compare_spectra.
    Equal to the (0, 0) spectrum for uniform kernels.
    """
    squared = _good_squared(kernel, sset).reshape(kernel.q * kernel.q, kernel.q - 1)
    rows = np.sort(squared, axis=1)
    distinct = np.unique(np.round(rows, 9), axis=0, return_index=True)[1]
    uniform = len(distinct) == 1
    worst: Optional[DistanceSpectrum] = None
    for idx in sorted(distinct):
        candidate = DistanceSpectrum(kind=GOOD, q=kernel.q, entries=bin_distances(rows[idx], tol),
                                     es=sset.es, uniform=uniform)
        if worst is None or compare_spectra(candidate, worst, tol) < 0:
            worst = candidate
    assert worst is not None
    return DistanceSpectrum(kind=GOOD, q=kernel.q, entries=worst.entries, es=sset.es,
                            uniform=uniform, worst_dmin=worst.d_min)


def candidate_permutations(q: int, fix_zero: bool) -> List[Tuple[int, ...]]:
    if fix_zero:
        return [(0,) + rest for rest in itertools.permutations(range(1, q))]
    return list(itertools.permutations(range(q)))


def _evaluate_chunk(chunk: Sequence[Tuple[int, ...]], sset: SignalSet, tol: float) -> List[Tuple[Tuple[int, ...], DistanceSpectrum]]:
    out = []
    for pi in chunk:
        kernel = kernel_from_permutation(sset.q, pi)
        out.append((pi, weakest_reference_spectrum(kernel, sset, tol)))
    return out


def search_permutations(sset: SignalSet, full_space: bool = False, objective: Optional[str] = None,
                        objective_snr_db: Optional[float] = None, max_workers: Optional[int] = None,
                        show_progress: bool = False) -> SearchReport:
    """
    Exhaustively search permutation kernels over a signal set.

    Over group-matched sets pi(0) = 0 is fixed (adding a constant to pi only
    rotates the outputs); other sets, or full_space=True, search all q! permutations.

    Args:
        sset: Signal set to design for
        full_space: Search every permutation even when the set is group-matched
        objective: 'spectrum' (lexicographic spectrum, default) or 'union_bound'
        objective_snr_db: SNR for the union-bound objective
        max_workers: Worker threads for candidate evaluation
        show_progress: Print a progress line while evaluating
    Returns:
        SearchReport with every maximizer, sorted lexicographically by pi
    """
    config = ConfigManager()
    q = sset.q
    max_q = int(config.get_search_setting("max_exhaustive_q"))
    if q > max_q:
        raise SearchError(f"Exhaustive search is limited to q <= {max_q} (q! candidates), got q={q}")
    objective = objective or config.get_search_setting("objective")
    if objective not in (OBJECTIVE_SPECTRUM, OBJECTIVE_UNION_BOUND):
        raise SearchError(f"Unknown search objective '{objective}'")
    if objective == OBJECTIVE_UNION_BOUND and objective_snr_db is None:
        objective_snr_db = float(config.get_search_setting("objective_snr_db"))
    tol = config.get_tolerance("distance")

    group_matched = is_group_matched(sset)
    fix_zero = group_matched and not full_space
    if not group_matched and not full_space:
        logger.info(f"Signal set '{sset.label}' is not group-matched; searching the full permutation space")
    candidates = candidate_permutations(q, fix_zero)
    logger.info(f"Searching {len(candidates)} permutation kernels for q={q} over '{sset.label}' (objective={objective})")

    chunks = [candidates[i:i + CANDIDATE_CHUNK] for i in range(0, len(candidates), CANDIDATE_CHUNK)]
    processor = BatchProcessor(max_workers=max_workers, show_progress=show_progress)
    scored = [item for chunk in processor.process_items(chunks, _evaluate_chunk, sset=sset, tol=tol) for item in chunk]

    if objective == OBJECTIVE_SPECTRUM:
        best_spec = functools.reduce(lambda acc, s: s if compare_spectra(s, acc, tol) > 0 else acc,
                                     (s for _, s in scored))
        best = sorted(pi for pi, s in scored if compare_spectra(s, best_spec, tol) == 0)
        best_ub = None
    else:
        snr = db_to_linear(objective_snr_db)
        bounds = [(pi, s, union_bound(s, snr)) for pi, s in scored]
        best_ub = min(b for _, _, b in bounds)
        winners = [(pi, s) for pi, s, b in bounds if b <= best_ub * (1.0 + 1e-12)]
        best = sorted(pi for pi, _ in winners)
        best_spec = dict(winners)[best[0]]

    bound = equidistant_dmin_bound(sset)
    if best_spec.d_min > bound + tol:
        raise SearchError(f"Search produced d_min {best_spec.d_min} above the equidistant bound {bound}")
    equidistant = is_equidistant(best_spec)
    logger.info(f"Best spectrum {best_spec.describe()} from {len(best)} maximizer(s); equidistant={equidistant}")

    return SearchReport(
        q=q, set_label=sset.label, objective=objective, best_permutations=best,
        best_spectrum=best_spec, equidistant_found=equidistant,
        search_space_size=len(candidates), dmin_bound=bound, full_space=not fix_zero,
        objective_snr_db=objective_snr_db if objective == OBJECTIVE_UNION_BOUND else None,
        best_union_bound=best_ub,
    )
