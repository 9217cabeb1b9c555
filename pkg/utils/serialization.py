import json
import math
from pathlib import Path

import numpy as np

FLOAT_FORMAT = "%.17g"


def format_float(value):
    """Format a double with 17 significant digits ('.' separator, no locale)."""
    return FLOAT_FORMAT % float(value)


def serialize_value(val):
    """Recursive serialization for nested lists/dicts and numpy/complex types."""
    if isinstance(val, np.ndarray):
        if np.iscomplexobj(val):
            return {
                "__ndarray__": True,
                "real": serialize_value(val.real.tolist()),
                "imag": serialize_value(val.imag.tolist()),
                "shape": list(val.shape),
            }
        return {
            "__ndarray__": True,
            "real": serialize_value(val.tolist()),
            "shape": list(val.shape),
        }
    elif isinstance(val, (complex, np.complexfloating)):
        return {"__complex__": True, "real": float(val.real), "imag": float(val.imag)}
    elif isinstance(val, (set, tuple)):
        # Convert set/tuple to list, mark the type
        return {
            "__type__": type(val).__name__,
            "data": [serialize_value(item) for item in val],
        }
    elif isinstance(val, list):
        return [serialize_value(item) for item in val]
    elif isinstance(val, dict):
        return {str(k): serialize_value(v) for k, v in val.items()}
    elif isinstance(val, (np.bool_,)):
        return bool(val)
    elif isinstance(val, (np.integer, np.floating)):
        return serialize_value(val.item())  # Convert numpy scalars to python scalars
    elif isinstance(val, float) and not math.isfinite(val):
        # JSON has no inf/nan literals
        return {"__float__": repr(val)}

    return val


def deserialize_value(val):
    """Recursive deserialization."""
    if isinstance(val, dict):
        if val.get("__ndarray__"):
            real = np.asarray(deserialize_value(val["real"]), dtype=float)
            if "imag" in val:
                imag = np.asarray(deserialize_value(val["imag"]), dtype=float)
                return (real + 1j * imag).reshape(val["shape"])
            return real.reshape(val["shape"])
        if val.get("__complex__"):
            return complex(val["real"], val["imag"])
        if "__float__" in val:
            return float(val["__float__"])

        if val.get("__type__") == "set":
            return set(deserialize_value(item) for item in val["data"])
        elif val.get("__type__") == "tuple":
            return tuple(deserialize_value(item) for item in val["data"])

        # Regular dict recursion
        return {k: deserialize_value(v) for k, v in val.items()}

    elif isinstance(val, list):
        return [deserialize_value(item) for item in val]

    return val


def save_json(path, payload):
    """Serialize payload and write it to path as indented JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(serialize_value(payload), f, indent=2, sort_keys=True)
    return path


def load_json(path):
    """Read a JSON file written by save_json and restore tagged values."""
    with open(path, "r", encoding="utf-8") as f:
        return deserialize_value(json.load(f))
