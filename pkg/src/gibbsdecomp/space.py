"""Finite product spaces with exact enumeration, distributions, and conditioning.

Implements:
  * ProductSpace: per-coordinate finite alphabets, metrics (diameter <= 1),
    strictly positive reference measures, and reference symbols.
  * Config: a single configuration together with its mixed-radix rank.
  * Distribution: an exact probability vector over all configurations.
  * marginal / condition / hamming_distance as pure functions.

The canonical enumeration order is mixed-radix with the LAST coordinate
varying fastest; every other module relies on this single order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DEFAULT_STATE_BUDGET: int = 1 << 20

_SUM_TOL = 1e-12


class StateBudgetError(RuntimeError):
    """Raised when a space's configuration count exceeds the enumeration budget."""


class ZeroMassError(ValueError):
    """Raised when conditioning on an event of zero probability."""


def _discrete_metric(k: int) -> np.ndarray:
    return 1.0 - np.eye(k)


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Config:
    """One configuration: symbol values, per-coordinate alphabet indices, rank."""

    symbols: tuple
    coords: tuple[int, ...]
    index: int


class ProductSpace:
    """A finite product of alphabets with metrics and reference measures.

    Parameters
    ----------
    alphabets : sequence of sequences
        Per-coordinate symbol lists (each of size >= 1).
    metrics : sequence of arrays, optional
        Per-coordinate symmetric distance tables with zero diagonal and
        values in [0, 1].  Defaults to the discrete metric.
    reference_measures : sequence of vectors, optional
        Per-coordinate probability vectors, strictly positive, summing to 1
        within 1e-12.  Defaults to uniform.
    reference_points : sequence, optional
        Per-coordinate reference symbol.  Defaults to the first symbol.
    state_budget : int
        Maximum number of configurations this space may enumerate.

    Instances are immutable after construction and safe to share across
    threads.
    """

    def __init__(
        self,
        alphabets: Sequence[Sequence],
        metrics: Sequence[np.ndarray] | None = None,
        reference_measures: Sequence[Sequence[float]] | None = None,
        reference_points: Sequence | None = None,
        state_budget: int = DEFAULT_STATE_BUDGET,
    ):
        if len(alphabets) == 0:
            raise ValueError("alphabets: need at least one coordinate")
        self.alphabets: tuple[tuple, ...] = tuple(tuple(a) for a in alphabets)
        self.n: int = len(self.alphabets)
        for i, a in enumerate(self.alphabets):
            if len(a) == 0:
                raise ValueError(f"coordinate {i}: alphabets entry must be nonempty")
            if len(set(a)) != len(a):
                raise ValueError(f"coordinate {i}: alphabets entry has repeated symbols")
        self.sizes: tuple[int, ...] = tuple(len(a) for a in self.alphabets)
        self._symbol_index = [{s: j for j, s in enumerate(a)} for a in self.alphabets]

        count = 1
        for k in self.sizes:
            count *= k
            if count > state_budget:
                raise StateBudgetError(
                    f"state count {int(np.prod(self.sizes, dtype=object))} exceeds "
                    f"budget {state_budget}"
                )
        self.state_count: int = count
        self.state_budget: int = state_budget

        if metrics is None:
            mats = [_discrete_metric(k) for k in self.sizes]
        else:
            if len(metrics) != self.n:
                raise ValueError("metrics: need one table per coordinate")
            mats = [np.asarray(m, dtype=float).copy() for m in metrics]
            for i, (m, k) in enumerate(zip(mats, self.sizes)):
                if m.shape != (k, k):
                    raise ValueError(f"coordinate {i}: metrics table must be {k}x{k}")
                if np.any(m < 0) or np.any(m > 1):
                    raise ValueError(f"coordinate {i}: metrics values must lie in [0, 1]")
                if np.any(np.diag(m) != 0):
                    raise ValueError(f"coordinate {i}: metrics diagonal must be zero")
                if not np.array_equal(m, m.T):
                    raise ValueError(f"coordinate {i}: metrics table must be symmetric")
        self.metrics: tuple[np.ndarray, ...] = tuple(_freeze(m) for m in mats)

        if reference_measures is None:
            lams = [np.full(k, 1.0 / k) for k in self.sizes]
        else:
            if len(reference_measures) != self.n:
                raise ValueError("reference_measures: need one vector per coordinate")
            lams = [np.asarray(v, dtype=float).copy() for v in reference_measures]
            for i, (v, k) in enumerate(zip(lams, self.sizes)):
                if v.shape != (k,):
                    raise ValueError(f"coordinate {i}: reference_measures must have length {k}")
                if np.any(v <= 0):
                    raise ValueError(
                        f"coordinate {i}: reference_measures entries must be strictly positive"
                    )
                if abs(float(v.sum()) - 1.0) > _SUM_TOL:
                    raise ValueError(f"coordinate {i}: reference_measures must sum to 1")
        self.reference_measures: tuple[np.ndarray, ...] = tuple(_freeze(v) for v in lams)

        if reference_points is None:
            refs = [a[0] for a in self.alphabets]
        else:
            if len(reference_points) != self.n:
                raise ValueError("reference_points: need one symbol per coordinate")
            refs = list(reference_points)
        self.reference_points: tuple[int, ...] = tuple(
            self.symbol_index(i, s) for i, s in enumerate(refs)
        )
        self.reference_symbols: tuple = tuple(refs)

        # strides for mixed-radix rank; last coordinate fastest
        strides = np.empty(self.n, dtype=np.int64)
        acc = 1
        for i in range(self.n - 1, -1, -1):
            strides[i] = acc
            acc *= self.sizes[i]
        self.strides: np.ndarray = _freeze(strides)

        self._config_matrix: np.ndarray | None = None
        self._log_reference: np.ndarray | None = None

    # -- indexing ---------------------------------------------------------

    def symbol_index(self, i: int, symbol) -> int:
        try:
            return self._symbol_index[i][symbol]
        except KeyError:
            raise ValueError(f"coordinate {i}: symbol {symbol!r} not in alphabet") from None

    def index_of(self, coords: Sequence[int]) -> int:
        if len(coords) != self.n:
            raise ValueError(f"need {self.n} coordinates, got {len(coords)}")
        idx = 0
        for i, (c, k) in enumerate(zip(coords, self.sizes)):
            if not 0 <= c < k:
                raise ValueError(f"coordinate {i}: index {c} out of range")
            idx += c * int(self.strides[i])
        return idx

    def coords_of(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.state_count:
            raise ValueError(f"config index {index} out of range")
        out = []
        for i in range(self.n):
            s = int(self.strides[i])
            out.append((index // s) % self.sizes[i])
        return tuple(out)

    def config_at(self, index: int) -> Config:
        coords = self.coords_of(index)
        symbols = tuple(self.alphabets[i][c] for i, c in enumerate(coords))
        return Config(symbols=symbols, coords=coords, index=index)

    def config_of(self, symbols: Sequence) -> Config:
        coords = tuple(self.symbol_index(i, s) for i, s in enumerate(symbols))
        return Config(symbols=tuple(symbols), coords=coords, index=self.index_of(coords))

    def config_matrix(self) -> np.ndarray:
        """(state_count, n) table of per-coordinate alphabet indices, canonical order."""
        if self._config_matrix is None:
            m = np.empty((self.state_count, self.n), dtype=np.int32)
            for i in range(self.n):
                stride = int(self.strides[i])
                col = np.repeat(np.arange(self.sizes[i], dtype=np.int32), stride)
                m[:, i] = np.tile(col, self.state_count // (self.sizes[i] * stride))
            self._config_matrix = _freeze(m)
        return self._config_matrix

    def log_reference_weights(self) -> np.ndarray:
        """Per-config log of the reference product measure, canonical order."""
        if self._log_reference is None:
            m = self.config_matrix()
            out = np.zeros(self.state_count)
            for i in range(self.n):
                out += np.log(self.reference_measures[i])[m[:, i]]
            self._log_reference = _freeze(out)
        return self._log_reference

    def restrict(self, coords: Sequence[int]) -> "ProductSpace":
        """The sub-product space over the given (sorted) coordinate subset."""
        coords = list(coords)
        return ProductSpace(
            [self.alphabets[i] for i in coords],
            metrics=[self.metrics[i] for i in coords],
            reference_measures=[self.reference_measures[i] for i in coords],
            reference_points=[self.reference_symbols[i] for i in coords],
            state_budget=self.state_budget,
        )

    def compatible(self, other: "ProductSpace") -> bool:
        return self is other or (
            self.alphabets == other.alphabets
            and all(np.array_equal(a, b) for a, b in zip(self.metrics, other.metrics))
            and all(
                np.array_equal(a, b)
                for a, b in zip(self.reference_measures, other.reference_measures)
            )
            and self.reference_points == other.reference_points
        )

    def __repr__(self) -> str:
        return f"ProductSpace(n={self.n}, sizes={self.sizes}, states={self.state_count})"


def enumerate_configs(space: ProductSpace) -> list[Config]:
    """All configurations in canonical order; position equals Config.index."""
    return [space.config_at(i) for i in range(space.state_count)]


def hamming_distance(space: ProductSpace, x: Config, y: Config) -> float:
    """Normalized Hamming average of the per-coordinate metrics, in [0, 1]."""
    total = np.empty(space.n)
    for i in range(space.n):
        total[i] = space.metrics[i][x.coords[i], y.coords[i]]
    return float(np.sum(total)) / space.n


class Distribution:
    """Exact probability vector over the configurations of a ProductSpace."""

    def __init__(self, space: ProductSpace, weights):
        w = np.asarray(weights, dtype=float)
        if w.shape != (space.state_count,):
            raise ValueError(
                f"weights must have length {space.state_count}, got {w.shape}"
            )
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > _SUM_TOL:
            raise ValueError(f"weights must sum to 1 (got {float(w.sum())!r})")
        self.space = space
        self.weights = _freeze(w.copy())

    @classmethod
    def uniform(cls, space: ProductSpace) -> "Distribution":
        return cls(space, np.full(space.state_count, 1.0 / space.state_count))

    @classmethod
    def point_mass(cls, space: ProductSpace, config: Config | int) -> "Distribution":
        idx = config if isinstance(config, int) else config.index
        w = np.zeros(space.state_count)
        w[idx] = 1.0
        return cls(space, w)

    @classmethod
    def normalized(cls, space: ProductSpace, raw) -> "Distribution":
        raw = np.asarray(raw, dtype=float)
        total = float(raw.sum())
        if total <= 0:
            raise ValueError("cannot normalize: total mass is not positive")
        return cls(space, raw / total)

    def prob(self, config: Config | int) -> float:
        idx = config if isinstance(config, int) else config.index
        return float(self.weights[idx])

    def event_prob(self, indices) -> float:
        return float(self.weights[np.asarray(indices, dtype=np.intp)].sum())

    def __repr__(self) -> str:
        return f"Distribution(states={self.space.state_count})"


def marginal(dist: Distribution, coords: Iterable[int]) -> Distribution:
    """Exact marginal onto a nonempty coordinate subset (sorted ascending)."""
    coords = sorted(set(int(c) for c in coords))
    if not coords:
        raise ValueError("coords must be a nonempty subset of coordinates")
    if coords[0] < 0 or coords[-1] >= dist.space.n:
        raise ValueError(f"coords out of range for n={dist.space.n}")
    space = dist.space
    tensor = dist.weights.reshape(space.sizes)
    drop = tuple(i for i in range(space.n) if i not in coords)
    summed = tensor.sum(axis=drop) if drop else tensor
    sub = space.restrict(coords)
    return Distribution(sub, summed.reshape(-1))


def condition(dist: Distribution, part) -> Distribution:
    """Renormalize on a set of config indices; zero off the part.

    `part` may be an index sequence or a boolean mask.  Conditioning on a
    zero-mass part raises ZeroMassError; callers drop empty parts first.
    """
    part = np.asarray(part)
    mask = np.zeros(dist.space.state_count, dtype=bool)
    if part.dtype == bool:
        if part.shape != (dist.space.state_count,):
            raise ValueError("boolean part mask has wrong length")
        mask = part
    else:
        mask[part.astype(np.intp)] = True
    total = float(dist.weights[mask].sum())
    if total <= 0.0:
        raise ZeroMassError("conditioning event has zero probability")
    w = np.zeros(dist.space.state_count)
    w[mask] = dist.weights[mask] / total
    return Distribution(dist.space, w)


def space_from_json(doc) -> ProductSpace:
    """Build a ProductSpace from a JSON document (string or parsed dict).

    Recognized fields: `alphabets` (required), `metrics`,
    `reference_measures`, `reference_points`, `state_budget`.
    """
    if isinstance(doc, str):
        doc = json.loads(doc)
    if not isinstance(doc, dict):
        raise ValueError("space document must be a JSON object")
    if "alphabets" not in doc:
        raise ValueError("space document: missing field 'alphabets'")
    known = {"alphabets", "metrics", "reference_measures", "reference_points", "state_budget"}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"space document: unknown fields {sorted(unknown)}")
    return ProductSpace(
        doc["alphabets"],
        metrics=doc.get("metrics"),
        reference_measures=doc.get("reference_measures"),
        reference_points=doc.get("reference_points"),
        state_budget=int(doc.get("state_budget", DEFAULT_STATE_BUDGET)),
    )
