"""Parameter blobs: a JSON header (layout + metadata) followed by the raw
float64 bytes of every array in header order."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"ELNN"


def save_params(path: str | Path, params: dict[str, np.ndarray], meta: dict | None = None) -> None:
    names = list(params)
    header = {
        "meta": meta or {},
        "arrays": [{"name": n, "shape": list(params[n].shape)} for n in names],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(params[n], dtype=np.float64).tobytes())


def load_params(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError(f"{path}: not a parameter blob")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        params = {}
        for spec in header["arrays"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(count * 8), dtype=np.float64)
            params[spec["name"]] = data.reshape(shape).copy()
    return header["meta"], params
