"""Reader for the dslob tensor export and evaluation reports.

Used by the deep-model benchmark; depends only on numpy (jsonschema optional).
"""

import json
import pathlib

import numpy as np

_DTYPES = {
    "float32": "<f4",
    "uint8": "u1",
    "int8": "i1",
    "int32": "<i4",
}

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> str:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK
    return f"{h:016x}"


def load_descriptor(tensor_dir):
    path = pathlib.Path(tensor_dir) / "tensors.json"
    desc = json.loads(path.read_text())
    if desc.get("format") != "dslob-tensors" or desc.get("version") != 1:
        raise ValueError(f"{path}: not a dslob tensor export")
    if desc.get("byte_order") != "little":
        raise ValueError(f"{path}: unsupported byte order")
    return desc


def load_split(tensor_dir, name, verify_checksums=False):
    """Returns a dict of numpy arrays: X (n, 100, 40), y, last_mid, regime,
    scenario, day and, when exported, trend."""
    tensor_dir = pathlib.Path(tensor_dir)
    desc = load_descriptor(tensor_dir)
    split = desc["splits"][name]
    n = split["count"]
    rows, cols = desc["shape"]
    out = {}
    for key, meta in split["files"].items():
        raw = (tensor_dir / meta["path"]).read_bytes()
        if len(raw) != meta["bytes"]:
            raise ValueError(f"{meta['path']}: expected {meta['bytes']} bytes, found {len(raw)}")
        if verify_checksums and fnv1a64(raw) != meta["fnv1a64"]:
            raise ValueError(f"{meta['path']}: checksum mismatch")
        arr = np.frombuffer(raw, dtype=_DTYPES[desc["dtypes"][key]])
        expected = n * rows * cols if key == "X" else n
        if arr.size != expected:
            raise ValueError(f"{meta['path']}: expected {expected} values, found {arr.size}")
        out[key] = arr.reshape(n, rows, cols) if key == "X" else arr
    return out


def load_report(path, schema_path=None):
    report = json.loads(pathlib.Path(path).read_text())
    if schema_path is not None:
        import jsonschema

        jsonschema.validate(report, json.loads(pathlib.Path(schema_path).read_text()))
    return report


def make_report(model, params, rmse, counts, dataset_desc, seed, rmse_std=None, n_seeds=1):
    """Builds a report in the shared schema from per-split RMSE values."""
    return {
        "format": "dslob-eval-report",
        "version": 1,
        "domain": dataset_desc["domain"],
        "horizon": dataset_desc["horizon"],
        "seed": seed,
        "config_fingerprint": dataset_desc["config_fingerprint"],
        "columns": ["IID", "Small Shock", "Large Shock"],
        "counts": counts,
        "rows": [
            {
                "model": model,
                "params": params,
                "n_seeds": n_seeds,
                "rmse": rmse,
                "rmse_std": rmse_std,
            }
        ],
    }
