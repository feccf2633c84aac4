"""Shared on-disk format for saved indexes: one npz with a JSON meta entry."""
from __future__ import annotations

import json

import numpy as np

from ..core import IndexFormatError

FORMAT_VERSION = 1


def save_index_file(path: str, method: str, meta: dict, arrays: dict) -> None:
    header = {"format_version": FORMAT_VERSION, "method": method, **meta}
    payload = {"meta_json": np.frombuffer(
        json.dumps(header).encode("utf-8"), dtype=np.uint8)}
    payload.update(arrays)
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_index_file(path: str, method: str) -> tuple[dict, dict]:
    try:
        bundle = np.load(path, allow_pickle=False)
        meta = json.loads(bytes(bundle["meta_json"]).decode("utf-8"))
    except Exception as exc:
        raise IndexFormatError(f"cannot read index file {path!r}: {exc}") from exc
    if meta.get("format_version") != FORMAT_VERSION:
        raise IndexFormatError(
            f"index file {path!r} has format version {meta.get('format_version')}, "
            f"expected {FORMAT_VERSION}")
    if meta.get("method") != method:
        raise IndexFormatError(
            f"index file {path!r} was saved by method {meta.get('method')!r}, "
            f"not {method!r}")
    arrays = {k: bundle[k] for k in bundle.files if k != "meta_json"}
    return meta, arrays
