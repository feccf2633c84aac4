"""Space interface: a named distance-function family over opaque payloads.

A space parses objects from text, serializes them back, computes distances,
and (for vector spaces) exposes dense coordinates for projection methods.
Distance arithmetic is always carried out in float64 regardless of the
declared storage type; the storage type only narrows parsed values.

Single-pair and batch evaluations share one kernel: ``distance(x, y)`` is the
one-row case of ``batch_distance(stack, y)``, so both paths produce bitwise
identical values.
"""
from __future__ import annotations

import numpy as np

from ..data import DataFormatError
from ..params import ParamError, ParamMap

DIST_DTYPES = {"int": np.int64, "float": np.float32, "double": np.float64}


class SpaceError(ValueError):
    """Space misuse: bad payloads, dimension mismatch, domain violations."""


class Space:
    """Base class for all distance spaces.

    Subclasses implement ``parse_line``/``format_payload`` and
    ``_distance``; vector spaces additionally override ``stack`` and
    ``_batch_distance`` and the projection hooks.
    """

    #: mnemonic under which the space is registered
    name: str = ""
    #: textual parameters the space was created with (for dataset metadata)
    param_text: str = ""
    #: declared distance value type: "int", "float", or "double"
    dist_type: str = "float"

    @property
    def store_dtype(self):
        return DIST_DTYPES[self.dist_type]

    # -- object I/O ---------------------------------------------------------
    def parse_line(self, line: str) -> tuple[int, object]:
        """Parse one text row into (label, payload)."""
        raise NotImplementedError

    def format_payload(self, payload) -> str:
        """Serialize a payload back to its text-row form (label excluded)."""
        raise NotImplementedError

    # -- distances ----------------------------------------------------------
    def _distance(self, x, y) -> float:
        raise NotImplementedError

    def index_time_distance(self, x, y) -> float:
        """Distance entry point for index construction.

        Search-phase code must go through a query object instead, so that
        every evaluation is counted.
        """
        return self._distance(x, y)

    # -- optional batch kernel ----------------------------------------------
    def stack(self, payloads) -> object | None:
        """Pack payloads into a batch-evaluable block, or None if unsupported."""
        return None

    def _batch_distance(self, block, y) -> np.ndarray:
        raise NotImplementedError

    def take(self, block, ids):
        """Sub-block of a stacked block for the given row indices."""
        return block[np.asarray(ids, dtype=np.int64)]

    def supports_batch(self) -> bool:
        return type(self)._batch_distance is not Space._batch_distance

    # -- projection hooks ----------------------------------------------------
    def elem_count(self, payload) -> int:
        """Number of dense coordinates, or 0 for non-vector payloads."""
        return 0

    def dense_coords(self, payload) -> np.ndarray | None:
        """Dense float64 coordinates for classic random projections."""
        return None

    def __repr__(self) -> str:
        suffix = f":{self.param_text}" if self.param_text else ""
        return f"<space {self.name}{suffix} ({self.dist_type})>"


_SPACE_FACTORIES: dict[str, tuple[object, tuple[str, ...]]] = {}


def register_space(name: str, factory,
                   dist_types: tuple[str, ...] = ("float", "double")) -> None:
    """Register ``factory(params: ParamMap, dist_type: str) -> Space`` along
    with the distance value types the space is defined for."""
    if name in _SPACE_FACTORIES:
        raise ValueError(f"space {name!r} already registered")
    _SPACE_FACTORIES[name] = (factory, dist_types)


def registered_spaces() -> list[str]:
    return sorted(_SPACE_FACTORIES)


def create_space(descriptor: str, dist_type: str = "float") -> Space:
    """Create a space from ``<name>[:<param>=<value>[,...]]``.

    A bare parameter value is shorthand for the space's principal parameter,
    e.g. ``lp:0.5`` means ``lp:p=0.5``.
    """
    if dist_type not in DIST_DTYPES:
        raise ParamError(f"unknown distance value type {dist_type!r}")
    name, sep, param_text = descriptor.partition(":")
    name = name.strip()
    if name not in _SPACE_FACTORIES:
        raise ParamError(f"unknown space {name!r}; known: {registered_spaces()}")
    factory, allowed = _SPACE_FACTORIES[name]
    if dist_type not in allowed:
        raise ParamError(
            f"space {name!r} is defined for distType {'/'.join(allowed)}, "
            f"not {dist_type!r}")
    if sep and param_text and "=" not in param_text:
        if name != "lp" and name != "lp_sparse":
            raise ParamError(f"bare parameter value only supported for lp spaces: {descriptor!r}")
        param_text = f"p={param_text}"
    params = ParamMap.parse(param_text)
    space = factory(params, dist_type)
    params.check_unused()
    space.name = name
    space.param_text = param_text
    space.dist_type = dist_type
    return space


def check_same_dim(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape[-1] != y.shape[-1]:
        raise SpaceError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")


__all__ = [
    "Space", "SpaceError", "register_space", "registered_spaces",
    "create_space", "check_same_dim", "DIST_DTYPES", "DataFormatError",
]
