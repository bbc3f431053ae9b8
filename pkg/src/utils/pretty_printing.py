"""Pretty-Print Utils."""

import json
import math
from typing import Any

import numpy as np
import pydantic


def _serializer(item: Any) -> Any:
    """Serialize using heuristics."""
    if isinstance(item, pydantic.BaseModel):
        return item.model_dump(mode="json", by_alias=True)

    if isinstance(item, np.ndarray):
        return item.tolist()

    if isinstance(item, np.generic):
        return item.item()

    return str(item)


def _finite_or_none(data: Any) -> Any:
    """Replace NaN/inf floats with None so the output stays strict JSON."""
    if isinstance(data, float) and not math.isfinite(data):
        return None
    if isinstance(data, dict):
        return {k: _finite_or_none(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [_finite_or_none(v) for v in data]
    return data


def to_json(data: Any) -> str:
    """Serialize nested items deterministically (sorted keys, strict JSON)."""
    normalized = json.loads(json.dumps(data, default=_serializer))
    return json.dumps(
        _finite_or_none(normalized), indent=2, sort_keys=True, allow_nan=False
    )
