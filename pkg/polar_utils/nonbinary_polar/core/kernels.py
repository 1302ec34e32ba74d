# core/kernels.py

"""
Core module for polarizing kernels.
A kernel is a q x q table f(u1, u2) (row = u1, column = u2) that must be a
permutation along every row and every column. Provides validation, the
u1 + pi(u2) construction, the built-in named kernels, per-stage schedules,
and the structural checks (closed subsets, distinct-entry submatrices).
"""

import itertools
import re
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import KernelError
from ..utils.cache_manager import cached, array_fingerprint

import logging
logger = logging.getLogger(__name__)

MAX_SUBGROUP_Q = 16

# u2 permutations of the proposed kernels, f(u1, u2) = u1 + pi(u2) mod q
NAMED_PERMUTATIONS: Dict[str, Tuple[int, ...]] = {
    "L3": (0, 2, 1),
    "L4": (0, 2, 1, 3),
    "L5a": (0, 2, 4, 1, 3),
    "L5b": (0, 3, 1, 4, 2),
    "L8": (0, 3, 6, 1, 4, 7, 2, 5),
}

# Not of the u1 + pi(u2) type; row index u1, column index u2.
M4_TABLE = (
    (0, 2, 1, 3),
    (1, 3, 0, 2),
    (2, 0, 3, 1),
    (3, 1, 2, 0),
)

PARAMETRIC_NAME_PATTERN = re.compile(r"^(standard|sasoglu)(?:\((\d+)\)|:?(\d+))?$")


@dataclass(frozen=True, eq=False)
class Kernel:
    """Validated q x q kernel table; entry [u1, u2] = f(u1, u2)."""
    q: int
    table: np.ndarray
    label: str = "custom"
    fingerprint: str = field(init=False, repr=False)

    def __post_init__(self):
        tbl = np.asarray(self.table, dtype=np.int64).copy()
        tbl.setflags(write=False)
        object.__setattr__(self, "table", tbl)
        object.__setattr__(self, "fingerprint", f"{self.q}:{array_fingerprint(tbl)}")

    def __repr__(self) -> str:
        return f"Kernel(label={self.label!r}, q={self.q})"

    def __call__(self, u1, u2):
        return self.table[u1, u2]

    def same_table(self, other: "Kernel") -> bool:
        return self.q == other.q and bool(np.array_equal(self.table, other.table))

    def to_dict(self) -> Dict[str, Any]:
        return {"q": self.q, "label": self.label, "table": self.table.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Kernel":
        """Accepts {"q", "label", "table"} or the shorthand {"q", "pi"}."""
        if "table" in data:
            kernel = validate_kernel(data["table"], label=str(data.get("label", "custom")))
            if "q" in data and int(data["q"]) != kernel.q:
                raise KernelError(f"Kernel JSON q={data['q']} does not match a {kernel.q}x{kernel.q} table")
            return kernel
        if "pi" in data:
            q = int(data.get("q", len(data["pi"])))
            return kernel_from_permutation(q, data["pi"], label=data.get("label"))
        raise KernelError("Kernel JSON needs either 'table' or 'pi'")


@dataclass(frozen=True)
class KernelSchedule:
    """
    Per-stage kernels of a length-2^n code. stages[0] sits next to the inputs u,
    stages[-1] is the channel stage next to the outputs x.
    """
    stages: Tuple[Kernel, ...]

    def __post_init__(self):
        if not self.stages:
            raise KernelError("A kernel schedule needs at least one stage")
        qs = {k.q for k in self.stages}
        if len(qs) != 1:
            raise KernelError(f"Kernels in a schedule must share q, got {sorted(qs)}")

    @property
    def q(self) -> int:
        return self.stages[0].q

    @property
    def n(self) -> int:
        return len(self.stages)

    @property
    def names(self) -> List[str]:
        return [k.label for k in self.stages]

    @classmethod
    def uniform(cls, kernel: Kernel, n: int) -> "KernelSchedule":
        if n < 1:
            raise KernelError(f"Schedule length must be >= 1, got {n}")
        return cls(tuple([kernel] * n))

    @classmethod
    def channel_stage_only(cls, kernel: Kernel, base: Kernel, n: int) -> "KernelSchedule":
        """`kernel` at the channel stage (stage n), `base` at stages 1..n-1."""
        if n < 1:
            raise KernelError(f"Schedule length must be >= 1, got {n}")
        if kernel.q != base.q:
            raise KernelError(f"Channel-stage kernel q={kernel.q} differs from base q={base.q}")
        return cls(tuple([base] * (n - 1) + [kernel]))


def _first_non_permutation(rows: np.ndarray, q: int) -> Optional[int]:
    target = np.arange(q)
    for idx, row in enumerate(rows):
        if not np.array_equal(np.sort(row), target):
            return idx
    return None


def validate_kernel(table: Any, label: str = "custom") -> Kernel:
    """
    Validate a q x q symbol table and wrap it as a Kernel.

    Raises:
        KernelError: naming the first row (u1) or column (u2) that is not a permutation
    """
    try:
        tbl = np.asarray(table, dtype=np.int64)
    except (TypeError, ValueError) as e:
        raise KernelError(f"Kernel table is not an integer array: {e}") from e
    if tbl.ndim != 2 or tbl.shape[0] != tbl.shape[1]:
        raise KernelError(f"Kernel table must be square, got shape {tbl.shape}")
    q = tbl.shape[0]
    if q < 2:
        raise KernelError(f"Kernel needs q >= 2, got {q}")
    if tbl.min() < 0 or tbl.max() >= q:
        raise KernelError(f"Kernel entries must lie in 0..{q - 1}")
    bad_row = _first_non_permutation(tbl, q)
    if bad_row is not None:
        raise KernelError(f"Row {bad_row} of kernel '{label}' is not a permutation (f not invertible in u2 for u1={bad_row})")
    bad_col = _first_non_permutation(tbl.T, q)
    if bad_col is not None:
        raise KernelError(f"Column {bad_col} of kernel '{label}' is not a permutation (f not invertible in u1 for u2={bad_col})")
    return Kernel(q=q, table=tbl, label=label)


def _check_permutation(q: int, pi: Sequence[int]) -> np.ndarray:
    perm = np.asarray(list(pi), dtype=np.int64)
    if perm.ndim != 1 or perm.size != q or not np.array_equal(np.sort(perm), np.arange(q)):
        raise KernelError(f"{list(pi)} is not a permutation of 0..{q - 1}")
    return perm


def kernel_from_permutation(q: int, pi: Sequence[int], label: Optional[str] = None) -> Kernel:
    """f(u1, u2) = (u1 + pi(u2)) mod q."""
    if q < 2:
        raise KernelError(f"Kernel needs q >= 2, got {q}")
    perm = _check_permutation(q, pi)
    table = (np.arange(q)[:, None] + perm[None, :]) % q
    return Kernel(q=q, table=table, label=label or f"perm{tuple(int(p) for p in perm)}")


def sasoglu_permutation(q: int) -> Tuple[int, ...]:
    """pi(0) = floor(q/2); pi(x) = x-1 for 1 <= x <= floor(q/2); pi(x) = x otherwise."""
    half = q // 2
    return tuple([half] + [x - 1 if x <= half else x for x in range(1, q)])


def sasoglu_kernel(q: int) -> Kernel:
    if q < 2:
        raise KernelError(f"Kernel needs q >= 2, got {q}")
    return kernel_from_permutation(q, sasoglu_permutation(q), label=f"sasoglu{q}")


def standard_kernel(q: int) -> Kernel:
    """f(u1, u2) = u1 + u2 mod q."""
    return kernel_from_permutation(q, range(q), label=f"standard{q}")


def builtin_kernel(name: str, q: Optional[int] = None) -> Kernel:
    """
    Resolve a built-in kernel name.

    Args:
        name: standard / sasoglu (with q, or written 'standard5', 'standard(5)', 'sasoglu:8'),
              or one of L3, L4, L5a, L5b, L8, M4
        q: Alphabet size for the parametric families; checked against fixed-size kernels
    Raises:
        KernelError: unknown name or q mismatch
    """
    key = name.strip()
    match = PARAMETRIC_NAME_PATTERN.match(key.lower())
    if match:
        named_q = match.group(2) or match.group(3)
        if named_q is not None:
            if q is not None and int(named_q) != q:
                raise KernelError(f"Kernel '{name}' conflicts with q={q}")
            q = int(named_q)
        if q is None:
            raise KernelError(f"Kernel '{name}' needs an alphabet size q")
        return standard_kernel(q) if match.group(1) == "standard" else sasoglu_kernel(q)

    canonical = {k.lower(): k for k in list(NAMED_PERMUTATIONS) + ["M4"]}.get(key.lower())
    if canonical is None:
        raise KernelError(f"Unknown kernel '{name}'. Known: standard(q), sasoglu(q), {', '.join(NAMED_PERMUTATIONS)}, M4")
    if canonical == "M4":
        kernel = validate_kernel(M4_TABLE, label="M4")
    else:
        pi = NAMED_PERMUTATIONS[canonical]
        kernel = kernel_from_permutation(len(pi), pi, label=canonical)
    if q is not None and kernel.q != q:
        raise KernelError(f"Kernel '{canonical}' has q={kernel.q}, but q={q} was requested")
    return kernel


def builtin_kernel_names() -> List[str]:
    return ["standard", "sasoglu"] + list(NAMED_PERMUTATIONS) + ["M4"]


def schedule_from_names(names: Iterable[str], q: int) -> KernelSchedule:
    return KernelSchedule(tuple(builtin_kernel(name, q) for name in names))


@cached("kernel_inverses", key_func=lambda kernel: f"inv_u1:{kernel.fingerprint}")
def invert_u1(kernel: Kernel) -> np.ndarray:
    """Table g with g[x, u2] = the u1 such that f(u1, u2) = x (column inverses)."""
    q = kernel.q
    inv = np.empty((q, q), dtype=np.int64)
    u1 = np.arange(q)
    for u2 in range(q):
        inv[kernel.table[:, u2], u2] = u1
    return inv


@cached("kernel_inverses", key_func=lambda kernel: f"inv_u2:{kernel.fingerprint}")
def invert_u2(kernel: Kernel) -> np.ndarray:
    """Table h with h[u1, x] = the u2 such that f(u1, u2) = x (row inverses)."""
    q = kernel.q
    inv = np.empty((q, q), dtype=np.int64)
    u2 = np.arange(q)
    for u1 in range(q):
        inv[u1, kernel.table[u1, :]] = u2
    return inv


def permutation_of(kernel: Kernel) -> Optional[Tuple[int, ...]]:
    """
    Recover pi if the kernel is of the form u1 + pi(u2) mod q, else None.
    Row 0 holds pi directly; every other row must be its cyclic shift.
    """
    pi = kernel.table[0]
    expected = (np.arange(kernel.q)[:, None] + pi[None, :]) % kernel.q
    if not np.array_equal(expected, kernel.table):
        return None
    return tuple(int(p) for p in pi)


def subgroup_anomaly(kernel: Kernel) -> Optional[FrozenSet[int]]:
    """
    Find a proper nontrivial symbol subset S (1 < |S| < q) closed under f.

    Subsets are tried by increasing size, then lexicographically, so the result
    is deterministic. Returns None when no such subset exists.
    """
    q = kernel.q
    if q > MAX_SUBGROUP_Q:
        raise KernelError(f"Subset enumeration is limited to q <= {MAX_SUBGROUP_Q}, got q={q}")
    table = kernel.table
    for size in range(2, q):
        for subset in itertools.combinations(range(q), size):
            idx = np.array(subset)
            produced = table[np.ix_(idx, idx)]
            if np.all(np.isin(produced, idx)):
                logger.debug(f"Kernel '{kernel.label}' has closed subset {subset}")
                return frozenset(subset)
    return None


def distinct_entries_check(kernel: Kernel, subset_size: int) -> bool:
    """
    True iff for every choice of K distinct symbols a_0..a_{K-1} the submatrix
    B_ij = f(a_i, a_j) holds at least K+1 distinct entries.
    """
    q = kernel.q
    if not 2 <= subset_size <= q - 1:
        raise KernelError(f"Subset size must lie in 2..{q - 1}, got {subset_size}")
    table = kernel.table
    for subset in itertools.combinations(range(q), subset_size):
        idx = np.array(subset)
        if np.unique(table[np.ix_(idx, idx)]).size < subset_size + 1:
            logger.debug(f"Kernel '{kernel.label}': subset {subset} yields too few distinct entries")
            return False
    return True


# Polarization-speed schedule variants. "proposed" resolves to the q-specific
# kernel below unless the caller names one.
PROPOSED_BY_Q: Dict[int, str] = {3: "L3", 4: "L4", 5: "L5a", 8: "L8"}
SCHEDULE_VARIANTS = (
    "all-proposed",
    "all-sasoglu",
    "all-standard",
    "channel-stage-only-proposed",
    "channel-stage-only-sasoglu",
)


def proposed_kernel(q: int) -> Kernel:
    if q not in PROPOSED_BY_Q:
        raise KernelError(f"No built-in proposed kernel for q={q}; pass a kernel name explicitly")
    return builtin_kernel(PROPOSED_BY_Q[q], q)


def schedule_variant(variant: str, q: int, n: int, proposed: Optional[str] = None) -> KernelSchedule:
    """
    Build one of SCHEDULE_VARIANTS for a length-2^n code. The channel-stage-only
    variants use the standard kernel at stages 1..n-1.
    """
    key = variant.strip().lower()
    if key not in SCHEDULE_VARIANTS:
        raise KernelError(f"Unknown schedule variant '{variant}'. Known: {', '.join(SCHEDULE_VARIANTS)}")
    special = key.rsplit("-", 1)[1]
    if special == "proposed":
        kernel = builtin_kernel(proposed, q) if proposed else proposed_kernel(q)
    elif special == "sasoglu":
        kernel = sasoglu_kernel(q)
    else:
        kernel = standard_kernel(q)
    if key.startswith("channel-stage-only"):
        return KernelSchedule.channel_stage_only(kernel, standard_kernel(q), n)
    return KernelSchedule.uniform(kernel, n)
