# io/report_io.py

"""
IO module for experiment spec files and result files.
CSV and JSON outputs carry the config hash (SHA-256 of the canonical spec
JSON) and the seed, so any file can be traced back to the run that made it.
"""

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence

from ..core.exceptions import ConfigurationError
from ..utils.path_utils import normalize_path

import logging
logger = logging.getLogger(__name__)

HEADER_PREFIX = "#"


@dataclass
class ExperimentSpec:
    """
    One reproducible experiment: the subcommand plus every option it ran with.
    Unset fields are omitted from the canonical form, so adding a new optional
    field does not change the hash of existing specs.
    """
    command: str
    q: Optional[int] = None
    set_name: Optional[str] = None
    kernel: Optional[str] = None
    schedule: Optional[List[str]] = None
    N: Optional[int] = None
    snr_grid: Optional[List[float]] = None
    trials: Optional[int] = None
    seed: int = 0
    output: Optional[str] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def canonical(self) -> Dict[str, Any]:
        data = {k: v for k, v in asdict(self).items() if v is not None and k not in ("extra", "output")}
        data.update({k: v for k, v in self.extra.items() if v is not None})
        return data

    @property
    def config_hash(self) -> str:
        return config_hash(self.canonical())


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def config_hash(data: Any) -> str:
    """SHA-256 hex digest of the canonical JSON form of data."""
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


def load_spec_file(path: str) -> Dict[str, Any]:
    """
    Read an experiment spec file (a JSON object).

    Raises:
        ConfigurationError: missing file, invalid JSON or a non-object top level
    """
    path = normalize_path(path)
    if not os.path.exists(path):
        raise ConfigurationError(f"Spec file not found: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Spec file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"Spec file {path} must hold a JSON object")
    logger.debug(f"Loaded spec file {path} with keys {sorted(data)}")
    return data


def _open_output(path: str):
    path = normalize_path(path)
    dirname = os.path.dirname(path)
    if dirname:
        os.makedirs(dirname, exist_ok=True)
    return path


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]], config_hash_value: str,
              seed: Optional[int]) -> str:
    """Write rows under a '# config_hash=..., seed=...' comment line and a column header."""
    path = _open_output(path)
    count = 0
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(f"{HEADER_PREFIX} config_hash={config_hash_value}, seed={seed}\n")
        writer = csv.writer(f)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])
            count += 1
    logger.info(f"Wrote {count} rows to {path}")
    return path


def _format_cell(value: Any) -> Any:
    if isinstance(value, float):
        return repr(value)
    return value


def read_csv(path: str) -> List[Dict[str, str]]:
    """Read a result CSV back as dicts, skipping comment lines."""
    path = normalize_path(path)
    if not os.path.exists(path):
        raise ConfigurationError(f"File not found: {path}")
    with open(path, 'r', encoding='utf-8', newline='') as f:
        lines = [line for line in f if not line.startswith(HEADER_PREFIX)]
    return list(csv.DictReader(lines))


def read_csv_header(path: str) -> Dict[str, str]:
    """Parse the leading '# key=value, ...' comment of a result CSV."""
    path = normalize_path(path)
    with open(path, 'r', encoding='utf-8') as f:
        first = f.readline().strip()
    if not first.startswith(HEADER_PREFIX):
        return {}
    fields = {}
    for part in first[len(HEADER_PREFIX):].split(","):
        if "=" in part:
            key, value = part.split("=", 1)
            fields[key.strip()] = value.strip()
    return fields


def json_payload(data: Dict[str, Any], config_hash_value: str, seed: Optional[int]) -> Dict[str, Any]:
    """data plus the config_hash and seed fields every JSON output carries."""
    payload = dict(data)
    payload["config_hash"] = config_hash_value
    payload["seed"] = seed
    return payload


def write_json(path: str, data: Dict[str, Any], config_hash_value: str, seed: Optional[int]) -> str:
    path = _open_output(path)
    payload = json_payload(data, config_hash_value, seed)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(payload, f, indent=2, ensure_ascii=False)
    logger.info(f"Wrote {path}")
    return path


def load_frozen_set(path: str) -> FrozenSet[int]:
    """
    Load a frozen index set from a construction output: a JSON list, a JSON
    object with a 'frozen' list, or a CSV with an 'index' column (and an optional
    'frozen' column of 0/1 flags).
    """
    path = normalize_path(path)
    if not os.path.exists(path):
        raise ConfigurationError(f"Frozen-set file not found: {path}")
    try:
        if path.lower().endswith(".json"):
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
            indices = data.get("frozen") if isinstance(data, dict) else data
            if not isinstance(indices, list):
                raise ConfigurationError(f"No 'frozen' list in {path}")
            return frozenset(int(i) for i in indices)
        rows = read_csv(path)
        if rows and "frozen" in rows[0]:
            return frozenset(int(r["index"]) for r in rows if int(r["frozen"]))
        return frozenset(int(r["index"]) for r in rows)
    except (KeyError, ValueError, TypeError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"Malformed frozen-set file {path}: {e}") from e
