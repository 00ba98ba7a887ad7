import json
import os
import subprocess
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

from ..errors import InputError
from ..logging_utils import get_logger

logger = get_logger(__name__)

_REPO_ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))


def get_version() -> str:
    """`git describe` of the source tree, or the package version outside a checkout."""
    from .. import __version__

    try:
        result = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=_REPO_ROOT,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if result.returncode == 0 and result.stdout.strip():
            return result.stdout.strip()
    except (OSError, subprocess.SubprocessError) as e:
        logger.debug("git describe unavailable: %s", e)
    return f"v{__version__}"


@dataclass
class RunManifest:
    command: str
    config: Dict[str, Any]
    artifacts: Dict[str, str] = field(default_factory=dict)
    seeds: Dict[str, List[int]] = field(default_factory=dict)
    version: str = ""
    wall_time: float = 0.0
    fit_warnings: int = 0
    n_values: Optional[List[int]] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def write(self, path: str) -> str:
        missing = [p for p in self.artifacts.values() if not os.path.exists(p)]
        if missing:
            raise InputError(f"manifest references missing artifacts: {', '.join(missing)}")
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        logger.info("Wrote manifest to %s", path)
        return path
