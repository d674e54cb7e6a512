"""CSV/JSON emission with an embedded config and schema version.

CSV files start with two comment lines::

    # schema: qwgrid.<kind>/1
    # config: {"subcommand": ..., ...}

followed by a mandatory header row.  Decimal point '.', no thousands
separators, LF line endings.  Floats are written with ``repr`` (shortest
round-trip form), so equal inputs give byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

SCHEMA_VERSION = 1


@dataclass
class RunConfig:
    subcommand: str
    n: Optional[int] = None
    sizes: Optional[List[int]] = None
    marked: List[List[int]] = field(default_factory=list)
    strategy: Optional[str] = None
    radius_rule: Optional[str] = None
    eps: Optional[float] = None
    trials: int = 0
    master_seed: int = 0
    outputs: Dict[str, str] = field(default_factory=dict)
    workers: int = 1

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        return cls(**data)


def schema_name(kind: str) -> str:
    return f"qwgrid.{kind}/{SCHEMA_VERSION}"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(
    path: Union[str, Path],
    kind: str,
    config: RunConfig,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"# schema: {schema_name(kind)}",
        "# config: " + json.dumps(config.to_dict(), sort_keys=True),
        ",".join(header),
    ]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_csv(path: Union[str, Path]):
    """Return ``(schema, config_dict, header, rows)`` with rows as lists of strings."""
    schema, config = None, None
    header, rows = None, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# schema: "):
                schema = line[len("# schema: "):]
            elif line.startswith("# config: "):
                config = json.loads(line[len("# config: "):])
            elif header is None:
                header = line.split(",")
            elif line:
                rows.append(line.split(","))
    return schema, config, header, rows


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_json(path: Union[str, Path], kind: str, config: RunConfig, payload: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"schema": schema_name(kind), "config": config.to_dict(), **_jsonable(payload)}
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1, allow_nan=True)
        fh.write("\n")
    return path
