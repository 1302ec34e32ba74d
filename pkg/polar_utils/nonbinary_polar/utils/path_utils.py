# utils/path_utils.py

"""
Path helpers: normalization, project root discovery and output path resolution.
"""

import os
import re
import logging

from .cache_manager import cached

logger = logging.getLogger(__name__)

ROOT_INDICATORS = ('polar.config.json', '.git', 'pyproject.toml', 'setup.py', 'requirements.txt')
_DRIVE = re.compile(r"^[a-zA-Z]:")


def normalize_path(path: str) -> str:
    """Absolute path with forward slashes, no trailing slash, lower-case drive letter."""
    if not path:
        return ""
    normalized = os.path.normpath(os.path.abspath(path)).replace("\\", "/")
    if os.name == 'nt' and _DRIVE.match(normalized):
        normalized = normalized[0].lower() + normalized[1:]
    if len(normalized) > 1:
        normalized = normalized.rstrip('/')
    return normalized


@cached("project_root", key_func=lambda start: f"project_root:{start}")
def _find_root(start: str) -> str:
    current = start
    while True:
        if any(os.path.exists(os.path.join(current, marker)) for marker in ROOT_INDICATORS):
            return normalize_path(current)
        parent = os.path.dirname(current)
        if parent == current:
            logger.debug(f"No project marker above {start}; using it as the root")
            return normalize_path(start)
        current = parent


def get_project_root() -> str:
    """Nearest ancestor of the CWD holding a project marker (the CWD itself when none does)."""
    return _find_root(os.path.abspath(os.getcwd()))


def resolve_output_path(output_path: str, base_dir: str) -> str:
    """Resolve `output_path` against `base_dir` (unless absolute) and create its parent directory."""
    target = output_path if os.path.isabs(output_path) else os.path.join(base_dir, output_path)
    resolved = normalize_path(target)
    parent = os.path.dirname(resolved)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return resolved
