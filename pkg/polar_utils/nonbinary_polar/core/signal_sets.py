# core/signal_sets.py

"""
Core module for 2-D signal sets.
Builds q-PSK and the rotated 4-point set, and answers distance questions
about them. Points are stored as complex128 values (re = x, im = y).
"""

import math
import re
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import SignalSetError
from ..utils.cache_manager import cached, array_fingerprint

import logging
logger = logging.getLogger(__name__)

DISTANCE_TOLERANCE = 1e-9
SIGNAL_SET_NAME_PATTERN = re.compile(r"^(psk)(?:\((\d+)\)|:?(\d+))?$|^(rotated4)$")


@dataclass(frozen=True, eq=False)
class SignalSet:
    """q distinct complex points with signal energy es (joule per 2 dimensions)."""
    q: int
    points: np.ndarray
    es: float = 1.0
    label: str = "custom"
    fingerprint: str = field(init=False, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128).reshape(-1).copy()
        if self.q < 2:
            raise SignalSetError(f"Signal set needs q >= 2, got {self.q}")
        if pts.size != self.q:
            raise SignalSetError(f"Signal set '{self.label}' has {pts.size} points, expected q={self.q}")
        if not self.es > 0:
            raise SignalSetError(f"Signal energy must be positive, got {self.es}")
        if not np.all(np.isfinite(pts)):
            raise SignalSetError(f"Signal set '{self.label}' has non-finite points")
        tree = cKDTree(np.column_stack([pts.real, pts.imag]))
        if tree.query_pairs(r=DISTANCE_TOLERANCE * math.sqrt(self.es)):
            raise SignalSetError(f"Signal set '{self.label}' has coincident points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "fingerprint", f"{self.q}:{array_fingerprint(pts)}")

    def __repr__(self) -> str:
        return f"SignalSet(label={self.label!r}, q={self.q}, es={self.es})"

    def to_dict(self) -> Dict[str, Any]:
        """JSON form: {"q", "es", "points": [[re, im], ...]} plus the label."""
        return {
            "q": self.q,
            "es": self.es,
            "label": self.label,
            "points": [[float(p.real), float(p.imag)] for p in self.points],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SignalSet":
        try:
            pts = [complex(float(re_), float(im_)) for re_, im_ in data["points"]]
            return cls(q=int(data["q"]), points=np.array(pts), es=float(data.get("es", 1.0)),
                       label=str(data.get("label", "custom")))
        except (KeyError, TypeError, ValueError) as e:
            raise SignalSetError(f"Malformed signal set JSON: {e}") from e


def make_psk(q: int, es: float = 1.0) -> SignalSet:
    """
    Build the q-ary PSK signal set with point k = sqrt(es) * exp(2*pi*j*k/q).

    Args:
        q: Alphabet size (>= 2)
        es: Signal energy (> 0)
    Returns:
        SignalSet labelled 'psk{q}'
    """
    if not isinstance(q, (int, np.integer)) or q < 2:
        raise SignalSetError(f"PSK needs an integer q >= 2, got {q!r}")
    if not es > 0:
        raise SignalSetError(f"Signal energy must be positive, got {es}")
    k = np.arange(q)
    points = math.sqrt(es) * np.exp(2j * np.pi * k / q)
    return SignalSet(q=int(q), points=points, es=float(es), label=f"psk{q}")


def make_rotated4(es: float = 1.0) -> SignalSet:
    """
    Build the rotated 4-point set on the circle of radius sqrt(es):
    (1,0), (1/3, 2*sqrt(2)/3), (-1,0), (-1/3, -2*sqrt(2)/3).

    With this placement |s0-s1|^2 + |s0-s2|^2 = 2|s0-s3|^2, which is what lets
    the M4 kernel reach an equidistant good channel.
    """
    if not es > 0:
        raise SignalSetError(f"Signal energy must be positive, got {es}")
    c = 2.0 * math.sqrt(2.0) / 3.0
    unit = np.array([1.0 + 0j, complex(1.0 / 3.0, c), -1.0 + 0j, complex(-1.0 / 3.0, -c)])
    return SignalSet(q=4, points=math.sqrt(es) * unit, es=float(es), label="rotated4")


def signal_set_by_name(name: str, q: Optional[int] = None, es: float = 1.0) -> SignalSet:
    """
    Resolve a signal set name: 'psk' (needs q), 'psk5', 'psk(5)', 'psk:5' or 'rotated4'.
    """
    match = SIGNAL_SET_NAME_PATTERN.match(name.strip().lower())
    if not match:
        raise SignalSetError(f"Unknown signal set '{name}' (expected psk<q> or rotated4)")
    if match.group(4):
        if q is not None and q != 4:
            raise SignalSetError(f"rotated4 is a 4-point set, but q={q} was requested")
        return make_rotated4(es)
    named_q = match.group(2) or match.group(3)
    if named_q is not None:
        if q is not None and int(named_q) != q:
            raise SignalSetError(f"Signal set '{name}' conflicts with q={q}")
        q = int(named_q)
    if q is None:
        raise SignalSetError("PSK signal set requested without an alphabet size q")
    return make_psk(q, es)


@cached("distance_matrices", key_func=lambda sset: f"d2:{sset.fingerprint}")
def squared_distance_matrix(sset: SignalSet) -> np.ndarray:
    """q x q matrix of squared Euclidean distances |s_i - s_j|^2."""
    diff = sset.points[:, None] - sset.points[None, :]
    return np.abs(diff) ** 2


def pair_distance(sset: SignalSet, i: int, j: int) -> float:
    """
    Euclidean distance between points i and j.

    Raises:
        SignalSetError: If either index is outside 0..q-1
    """
    for idx in (i, j):
        if not (0 <= int(idx) < sset.q):
            raise SignalSetError(f"Symbol index {idx} out of range for q={sset.q}")
    if i == j:
        return 0.0
    return float(abs(sset.points[i] - sset.points[j]))


def energy_sum(sset: SignalSet) -> float:
    """Sum over k=1..q-1 of |s_k - s_0|^2."""
    return float(np.sum(np.abs(sset.points[1:] - sset.points[0]) ** 2))


def min_distance(sset: SignalSet) -> float:
    d2 = squared_distance_matrix(sset) + np.diag(np.full(sset.q, np.inf))
    return float(math.sqrt(np.min(d2)))


def is_group_matched(sset: SignalSet, tol: float = DISTANCE_TOLERANCE) -> bool:
    """
    True iff |s_{(l+k) mod q} - s_l| = |s_k - s_0| for all l, k, i.e. the set
    is matched to the cyclic group Z_q.
    """
    dist = np.sqrt(squared_distance_matrix(sset))
    q = sset.q
    l = np.arange(q)[:, None]
    k = np.arange(q)[None, :]
    shifted = dist[(l + k) % q, l]        # |s_{l+k} - s_l| for each (l, k)
    reference = np.broadcast_to(dist[k[0], 0][None, :], shifted.shape)
    scale = math.sqrt(sset.es)
    return bool(np.all(np.abs(shifted - reference) <= tol * max(1.0, scale)))
