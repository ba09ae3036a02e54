"""Multi-criteria tuning of boosted-tree pipelines.

Thin Python layer over the native core: JSON documents are exchanged as
dicts, errors surface as :class:`Error` with ``code``, ``message`` and
``field`` attributes.
"""

from __future__ import annotations

import json
from typing import Iterable, Optional, Sequence, Union

from . import _core

__all__ = [
    "Error",
    "Session",
    "dominates",
    "front_indices",
    "sample_weights",
    "scalarize",
    "subevaluation_grid",
    "subevaluation_rounds",
    "synthetic_income",
]

front_indices = _core.front_indices
dominates = _core.dominates
scalarize = _core.scalarize
sample_weights = _core.sample_weights
subevaluation_rounds = _core.subevaluation_rounds
subevaluation_grid = _core.subevaluation_grid


class Error(Exception):
    """Library error; ``code`` is one of the core error codes."""

    def __init__(self, code: str, message: str, field: str = ""):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
        self.field = field or None


def _translate(fn):
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _core.Error as e:
            code, message, field = e.args[0] if len(e.args) == 1 else e.args
            raise Error(code, message, field) from None

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


front_indices = _translate(front_indices)
dominates = _translate(dominates)
scalarize = _translate(scalarize)
sample_weights = _translate(sample_weights)


def synthetic_income(rows: int = 5000, seed: int = 7, label_bias: float = 0.8):
    """Synthetic income-like task. Returns ``(csv_text, schema_dict)``."""
    csv, schema = _core.synthetic_income(rows, seed, label_bias)
    return csv, json.loads(schema)


class Session:
    """One optimization session (archive, weight box, budget, RNG state)."""

    def __init__(self, handle: "_core._Session"):
        self._h = handle

    @classmethod
    @_translate
    def create(
        cls,
        csv: str,
        schema: dict,
        measures: Union[str, Sequence[Union[str, dict]]],
        *,
        seed: int = 1,
        m: int = 0,
        budget: Optional[int] = None,
        id: str = "session",
        **options,
    ) -> "Session":
        if isinstance(measures, str):
            measures = [s.strip() for s in measures.split(",") if s.strip()]
        config = {"schema": schema, "csv": csv, "measures": list(measures), "seed": seed, "m": m, "budget": budget}
        config.update(options)
        return cls(_core._Session.create(json.dumps(config), id))

    @classmethod
    @_translate
    def restore(cls, snapshot: str) -> "Session":
        return cls(_core._Session.restore(snapshot))

    @_translate
    def run(self, iterations: Optional[int] = None, seconds: Optional[float] = None) -> dict:
        self._h.run(iterations, seconds)
        return self.status()

    @_translate
    def set_weight_box(self, lower: Iterable[float], upper: Iterable[float]) -> None:
        self._h.set_weight_box(list(lower), list(upper))

    @_translate
    def status(self) -> dict:
        return json.loads(self._h.status())

    @_translate
    def front(self, split: str = "valid") -> dict:
        return json.loads(self._h.front(split, "json"))

    @_translate
    def front_csv(self, split: str = "valid") -> str:
        return self._h.front(split, "csv")

    @_translate
    def path(self) -> dict:
        return json.loads(self._h.path())

    @_translate
    def archive(self) -> dict:
        return json.loads(self._h.archive())

    @_translate
    def snapshot(self) -> str:
        return self._h.snapshot()
