"""Dimension-checked ``.npz`` serialization for trained backends."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .exceptions import ParameterError

FORMAT_VERSION = 1


def save_arrays(path, kind: str, dim: int, **arrays) -> None:
    with open(Path(path), "wb") as fh:
        np.savez(fh, __kind__=np.array(kind), __dim__=np.array(int(dim)),
                 __version__=np.array(FORMAT_VERSION), **arrays)


def load_arrays(path, kind: str, expected_dim: int | None = None) -> tuple[int, dict]:
    """Load a model file, rejecting the wrong kind or an unexpected dimension."""
    with np.load(Path(path), allow_pickle=False) as data:
        arrays = {k: data[k] for k in data.files}
    try:
        found_kind = str(arrays.pop("__kind__"))
        dim = int(arrays.pop("__dim__"))
        arrays.pop("__version__")
    except KeyError:
        raise ParameterError(f"{path}: missing model header") from None
    if found_kind != kind:
        raise ParameterError(f"{path}: holds a {found_kind!r} model, expected {kind!r}")
    if expected_dim is not None and dim != expected_dim:
        raise ParameterError(f"{path}: model dim {dim} != expected {expected_dim}")
    return dim, arrays
