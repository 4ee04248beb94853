"""
Finite-lattice six-vertex states.

Faces of an N×M vertex grid carry integer heights ``h[i, j]`` with
``0 <= i <= N`` (columns, x) and ``0 <= j <= M`` (rows, y); the first and last
rows and columns are the outer faces. Level curves of the height function are
the thick edges (the paths).

Edge arrays:
    vertical   ``ve[i, j] = h[i+1, j] - h[i, j]``, shape (N, M+1)
    horizontal ``he[i, j] = h[i, j+1] - h[i, j]``, shape (N+1, M)

Vertex (i, j) with ``i < N, j < M`` has south ``ve[i, j]``, north
``ve[i, j+1]``, west ``he[i, j]`` and east ``he[i+1, j]``.
"""

import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..utils.errors import CapExceeded, IceRuleViolation, LatticeError, NoCompletion
from .params import ModelParams, VertexWeights

logger = logging.getLogger(__name__)

# Above this many vertices, weights are accumulated in log space
LOG_SPACE_THRESHOLD = 64


class VertexType(str, Enum):
    """The six legal vertex configurations."""
    A1 = "a1"
    A2 = "a2"
    B1 = "b1"
    B2 = "b2"
    C1 = "c1"
    C2 = "c2"

    @classmethod
    def ordered(cls) -> Tuple["VertexType", ...]:
        return (cls.A1, cls.A2, cls.B1, cls.B2, cls.C1, cls.C2)


# (west, south, east, north) occupation -> vertex type
_PATTERNS: Dict[Tuple[int, int, int, int], VertexType] = {
    (1, 1, 1, 1): VertexType.A1,
    (0, 0, 0, 0): VertexType.A2,
    (1, 0, 1, 0): VertexType.B1,
    (0, 1, 0, 1): VertexType.B2,
    (1, 1, 0, 0): VertexType.C1,
    (0, 0, 1, 1): VertexType.C2,
}

# Integer code w + 2s + 4e + 8n -> index into VertexType.ordered(), -1 if illegal
_CODE_TABLE = np.full(16, -1, dtype=np.int64)
for _pattern, _label in _PATTERNS.items():
    _w, _s, _e, _n = _pattern
    _CODE_TABLE[_w + 2 * _s + 4 * _e + 8 * _n] = VertexType.ordered().index(_label)


def classify_vertex(incident_edges: Sequence[int]) -> VertexType:
    """
    Classify a vertex from its four incident edge occupations.

    Args:
        incident_edges: occupations (west, south, east, north), 1 = thick

    Returns:
        The vertex type

    Raises:
        IceRuleViolation: If the pattern is not one of the six legal ones
    """
    key = tuple(int(e) for e in incident_edges)
    if len(key) != 4 or key not in _PATTERNS:
        raise IceRuleViolation(f"Edge pattern {key} (west, south, east, north) is not a legal vertex")
    return _PATTERNS[key]


@dataclass(frozen=True)
class HeightFunction:
    """Integer heights on the (N+1)×(M+1) faces of an N×M lattice."""
    n: int
    m: int
    heights: np.ndarray

    def __post_init__(self):
        h = np.array(self.heights, dtype=np.int64)
        if h.shape != (self.n + 1, self.m + 1):
            raise LatticeError(f"Height table has shape {h.shape}, expected {(self.n + 1, self.m + 1)}")
        h.setflags(write=False)
        object.__setattr__(self, "heights", h)
        self.validate()

    def validate(self) -> None:
        """
        Check the height function invariants.

        Raises:
            LatticeError: If the southwest corner is not zero or a step is not 0 or 1
        """
        h = self.heights
        if h[0, 0] != 0:
            raise LatticeError(f"Height at the southwest corner must be 0, got {h[0, 0]}")
        for axis, name in ((0, "right"), (1, "up")):
            steps = np.diff(h, axis=axis)
            if steps.size and (steps.min() < 0 or steps.max() > 1):
                raise LatticeError(f"Heights must increase by 0 or 1 going {name}")

    @property
    def inner(self) -> np.ndarray:
        """Heights on the inner faces."""
        return self.heights[1:self.n, 1:self.m]

    def __eq__(self, other) -> bool:
        if not isinstance(other, HeightFunction):
            return NotImplemented
        return self.n == other.n and self.m == other.m and np.array_equal(self.heights, other.heights)

    def __hash__(self) -> int:
        return hash((self.n, self.m, self.heights.tobytes()))

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "m": self.m, "h": self.heights.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "HeightFunction":
        data = json.loads(text)
        return cls(n=int(data["n"]), m=int(data["m"]), heights=np.array(data["h"], dtype=np.int64))


@dataclass(frozen=True, eq=False)
class EdgeState:
    """Binary occupations of the vertical and horizontal edges."""
    vertical: np.ndarray
    horizontal: np.ndarray

    @property
    def n(self) -> int:
        return self.vertical.shape[0]

    @property
    def m(self) -> int:
        return self.horizontal.shape[1]

    def vertex_patterns(self) -> np.ndarray:
        """Integer codes w + 2s + 4e + 8n for every vertex, shape (N, M)."""
        ve, he = self.vertical, self.horizontal
        west = he[:-1, :]
        east = he[1:, :]
        south = ve[:, :-1]
        north = ve[:, 1:]
        return west + 2 * south + 4 * east + 8 * north

    def check_ice_rule(self) -> None:
        """
        Raises:
            IceRuleViolation: If any edge is not binary or any vertex pattern is illegal
        """
        for name, arr in (("vertical", self.vertical), ("horizontal", self.horizontal)):
            if arr.size and (arr.min() < 0 or arr.max() > 1):
                raise IceRuleViolation(f"{name} edges must be 0 (thin) or 1 (thick)")
        codes = _CODE_TABLE[self.vertex_patterns()]
        bad = np.argwhere(codes < 0)
        if bad.size:
            i, j = bad[0]
            raise IceRuleViolation(f"Vertex ({i}, {j}) violates the ice rule")


@dataclass(frozen=True)
class BoundaryValue:
    """
    Heights on the outer faces, four sequences read counterclockwise from
    the southwest corner.

    south: h[0..N, 0]; east: h[N, 0..M]; north: h[N..0, M]; west: h[0, M..0]
    """
    n: int
    m: int
    south: Tuple[int, ...]
    east: Tuple[int, ...]
    north: Tuple[int, ...]
    west: Tuple[int, ...]

    def faces(self) -> List[Tuple[int, int, int]]:
        """All boundary faces as (i, j, height), corners listed once."""
        n, m = self.n, self.m
        seen = {}
        for k, value in enumerate(self.south):
            seen[(k, 0)] = value
        for k, value in enumerate(self.east):
            seen[(n, k)] = value
        for k, value in enumerate(self.north):
            seen[(n - k, m)] = value
        for k, value in enumerate(self.west):
            seen[(0, m - k)] = value
        return [(i, j, v) for (i, j), v in seen.items()]

    def validate(self) -> None:
        """
        Check sequence lengths, corner agreement and unit steps.

        Raises:
            NoCompletion: If the boundary cannot be the trace of a height function
        """
        n, m = self.n, self.m
        if n < 1 or m < 1:
            raise NoCompletion(f"Lattice must be at least 1×1, got {n}×{m}")
        if (len(self.south), len(self.east), len(self.north), len(self.west)) != (n + 1, m + 1, n + 1, m + 1):
            raise NoCompletion("Boundary side lengths do not match the lattice size")
        corners = [
            (self.south[0], self.west[-1], "southwest"),
            (self.south[-1], self.east[0], "southeast"),
            (self.east[-1], self.north[0], "northeast"),
            (self.north[-1], self.west[0], "northwest"),
        ]
        for left, right, name in corners:
            if left != right:
                raise NoCompletion(f"Boundary sides disagree at the {name} corner")
        if self.south[0] != 0:
            raise NoCompletion("Boundary must vanish at the southwest corner")
        for name, seq, sign in (("south", self.south, 1), ("east", self.east, 1),
                                ("north", self.north, -1), ("west", self.west, -1)):
            steps = np.diff(np.asarray(seq)) * sign
            if steps.size and (steps.min() < 0 or steps.max() > 1):
                raise NoCompletion(f"Boundary {name} side must move by 0 or 1 per face in the height direction")

    def to_dict(self) -> dict:
        return {
            "n": self.n, "m": self.m,
            "south": list(self.south), "east": list(self.east),
            "north": list(self.north), "west": list(self.west),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BoundaryValue":
        return cls(
            n=int(data["n"]), m=int(data["m"]),
            south=tuple(data["south"]), east=tuple(data["east"]),
            north=tuple(data["north"]), west=tuple(data["west"]),
        )


def heights_to_edges(h: HeightFunction) -> EdgeState:
    """Thick edges are the level curves of the height function."""
    heights = h.heights
    return EdgeState(vertical=np.diff(heights, axis=0), horizontal=np.diff(heights, axis=1))


def edges_to_heights(e: EdgeState) -> HeightFunction:
    """
    Integrate an edge configuration back to its height function.

    Args:
        e: edge occupations

    Returns:
        The unique height function with h = 0 at the southwest corner

    Raises:
        IceRuleViolation: If the edges break the ice rule
    """
    e.check_ice_rule()
    n, m = e.n, e.m
    heights = np.zeros((n + 1, m + 1), dtype=np.int64)
    heights[1:, 0] = np.cumsum(e.vertical[:, 0])
    heights[:, 1:] = heights[:, :1] + np.cumsum(e.horizontal, axis=1)
    if not np.array_equal(np.diff(heights, axis=0), e.vertical):
        raise IceRuleViolation("Edge configuration is not the level set of a height function")
    return HeightFunction(n=n, m=m, heights=heights)


def boundary_of(h: HeightFunction) -> BoundaryValue:
    """Restriction of a height function to the outer faces."""
    t = h.heights
    return BoundaryValue(
        n=h.n, m=h.m,
        south=tuple(int(v) for v in t[:, 0]),
        east=tuple(int(v) for v in t[-1, :]),
        north=tuple(int(v) for v in t[::-1, -1]),
        west=tuple(int(v) for v in t[0, ::-1]),
    )


def dwbc_boundary(n: int) -> BoundaryValue:
    """
    Domain wall boundary on an n×n lattice: thick outer edges on the north
    and east sides, thin on the south and west sides.
    """
    if n < 1:
        raise NoCompletion(f"DWBC requires n >= 1, got {n}")
    return BoundaryValue(
        n=n, m=n,
        south=tuple([0] * (n + 1)),
        east=tuple(range(n + 1)),
        north=tuple(range(n, -1, -1)),
        west=tuple([0] * (n + 1)),
    )


def constant_boundary(n: int, m: int, value: int = 0) -> BoundaryValue:
    """Boundary with no thick outer edges."""
    if value != 0:
        raise NoCompletion("The southwest corner height is fixed to 0")
    return BoundaryValue(n=n, m=m, south=(0,) * (n + 1), east=(0,) * (m + 1),
                         north=(0,) * (n + 1), west=(0,) * (m + 1))


def _completion_bounds(b: BoundaryValue) -> Tuple[np.ndarray, np.ndarray]:
    b.validate()
    faces = np.array(b.faces(), dtype=np.int64)
    bi, bj, bh = faces[:, 0], faces[:, 1], faces[:, 2]
    ii, jj = np.meshgrid(np.arange(b.n + 1), np.arange(b.m + 1), indexing="ij")
    di = bi[None, None, :] - ii[..., None]
    dj = bj[None, None, :] - jj[..., None]
    # Steps needed to go from x up/right to the boundary face, and back
    up = np.maximum(di, 0) + np.maximum(dj, 0)
    down = np.maximum(-di, 0) + np.maximum(-dj, 0)
    lower = (bh[None, None, :] - up).max(axis=2)
    upper = (bh[None, None, :] + down).min(axis=2)
    if np.any(lower > upper) or np.any(lower[bi, bj] != bh) or np.any(upper[bi, bj] != bh):
        raise NoCompletion("Boundary heights violate the ice balance; no completion exists")
    return lower, upper


def min_height(b: BoundaryValue) -> HeightFunction:
    """
    Pointwise minimal completion of a boundary value.

    Raises:
        NoCompletion: If the boundary admits no completion
    """
    lower, _ = _completion_bounds(b)
    return HeightFunction(n=b.n, m=b.m, heights=lower)


def max_height(b: BoundaryValue) -> HeightFunction:
    """
    Pointwise maximal completion of a boundary value.

    Raises:
        NoCompletion: If the boundary admits no completion
    """
    _, upper = _completion_bounds(b)
    return HeightFunction(n=b.n, m=b.m, heights=upper)


def enumerate_states(b: BoundaryValue, cap: int = 1_000_000) -> List[HeightFunction]:
    """
    All completions of a boundary value, by depth-first search over inner
    faces row by row.

    Args:
        b: boundary value
        cap: maximal number of states to produce

    Returns:
        Height functions in lexicographic order of the row-major inner heights

    Raises:
        NoCompletion: If the boundary admits no completion
        CapExceeded: If more than ``cap`` states exist
    """
    lower, upper = _completion_bounds(b)
    n, m = b.n, b.m
    work = lower.copy()
    order = [(i, j) for j in range(1, m) for i in range(1, n)]
    states: List[HeightFunction] = []

    def descend(k: int) -> None:
        if k == len(order):
            if len(states) >= cap:
                raise CapExceeded(cap)
            states.append(HeightFunction(n=n, m=m, heights=work.copy()))
            return
        i, j = order[k]
        lo = max(lower[i, j], work[i - 1, j], work[i, j - 1])
        hi = min(upper[i, j], work[i - 1, j] + 1, work[i, j - 1] + 1)
        for value in range(lo, hi + 1):
            work[i, j] = value
            descend(k + 1)
        work[i, j] = lower[i, j]

    descend(0)
    logger.debug(f"Enumerated {len(states)} states on a {n}x{m} lattice")
    return states


def volume(h: HeightFunction) -> int:
    """Sum of heights over the inner faces."""
    return int(h.inner.sum())


def vertex_type_codes(h: HeightFunction) -> np.ndarray:
    """Index into ``VertexType.ordered()`` for every vertex, shape (N, M)."""
    codes = _CODE_TABLE[heights_to_edges(h).vertex_patterns()]
    if np.any(codes < 0):
        raise IceRuleViolation("Height function produced an illegal vertex")
    return codes


def vertex_counts(h: HeightFunction) -> Dict[VertexType, int]:
    """Number of vertices of each type."""
    counts = np.bincount(vertex_type_codes(h).ravel(), minlength=6)
    return {label: int(counts[k]) for k, label in enumerate(VertexType.ordered())}


def _as_weights(weights: Union[ModelParams, VertexWeights], c_ratio: float = 1.0) -> VertexWeights:
    if isinstance(weights, ModelParams):
        return weights.weights(c_ratio=c_ratio)
    return weights


def log_state_weight(h: HeightFunction, weights: Union[ModelParams, VertexWeights], q: float = 1.0) -> float:
    """Natural logarithm of ``state_weight``."""
    w = _as_weights(weights)
    counts = vertex_counts(h)
    logs = w.logs()
    total = sum(counts[label] * logs[k] for k, label in enumerate(VertexType.ordered()))
    return total + volume(h) * math.log(q)


def state_weight(h: HeightFunction, weights: Union[ModelParams, VertexWeights], q=1):
    """
    Weight q^vol(h) times the product of vertex weights.

    Exact products are used on small lattices, which keeps ``Fraction``
    weights and q rational; larger lattices go through log space.

    Args:
        h: height function
        weights: model parameters or explicit six weights
        q: volume weight

    Returns:
        The unnormalized probability of the state
    """
    if h.n * h.m > LOG_SPACE_THRESHOLD:
        return math.exp(log_state_weight(h, weights, float(q)))
    w = _as_weights(weights)
    counts = vertex_counts(h)
    value = q ** volume(h)
    for k, label in enumerate(VertexType.ordered()):
        value *= w.as_tuple()[k] ** counts[label]
    return value


def field_exponents(h: HeightFunction) -> Tuple[int, int]:
    """
    Exponents (X, Y) with weight = a^{n_a} b^{n_b} c^{n_c} e^{H X + V Y}.

    Each thick inner edge contributes twice, each thick outer edge once,
    and every vertex contributes −1 to both.
    """
    e = heights_to_edges(h)
    n, m = h.n, h.m
    he, ve = e.horizontal, e.vertical
    x = 2 * int(he[1:-1, :].sum()) + int(he[0, :].sum()) + int(he[-1, :].sum()) - n * m
    y = 2 * int(ve[:, 1:-1].sum()) + int(ve[:, 0].sum()) + int(ve[:, -1].sum()) - n * m
    return x, y


def counting_weight(h: HeightFunction, p: ModelParams) -> float:
    """State weight at q = 1 evaluated from edge counts instead of vertex products."""
    counts = vertex_counts(h)
    n_a = counts[VertexType.A1] + counts[VertexType.A2]
    n_b = counts[VertexType.B1] + counts[VertexType.B2]
    n_c = counts[VertexType.C1] + counts[VertexType.C2]
    x, y = field_exponents(h)
    return p.a ** n_a * p.b ** n_b * p.c ** n_c * math.exp(p.H * x + p.V * y)


def fixed_boundary_constants(h: HeightFunction) -> Tuple[int, int, int]:
    """(n(a1) − n(a2), n(b1) − n(b2), n(c2) − n(c1)); constant on a fixed boundary."""
    counts = vertex_counts(h)
    return (counts[VertexType.A1] - counts[VertexType.A2],
            counts[VertexType.B1] - counts[VertexType.B2],
            counts[VertexType.C2] - counts[VertexType.C1])


def partition_function(b: BoundaryValue, weights: Union[ModelParams, VertexWeights], q=1,
                       cap: int = 1_000_000, states: Optional[Iterable[HeightFunction]] = None):
    """Sum of state weights over all completions of ``b``."""
    if states is None:
        states = enumerate_states(b, cap=cap)
    return sum(state_weight(h, weights, q) for h in states)


def gauge_face_weights(s_vertical: np.ndarray, s_horizontal: np.ndarray) -> np.ndarray:
    """
    Face weights q_f induced by per-edge weights.

    Args:
        s_vertical: weights of vertical edges, shape (N, M+1); outer rows must be 1
        s_horizontal: weights of horizontal edges, shape (N+1, M); outer columns must be 1

    Returns:
        q_f on all (N+1)×(M+1) faces: product of weights of edges the face lies
        to the right of or above, divided by those it lies to the left of or below
    """
    n = s_vertical.shape[0]
    m = s_horizontal.shape[1]
    q = np.ones((n + 1, m + 1))
    q[1:, :] *= s_vertical
    q[:-1, :] /= s_vertical
    q[:, 1:] *= s_horizontal
    q[:, :-1] /= s_horizontal
    return q


def gauge_check(h: HeightFunction, s_vertical: np.ndarray, s_horizontal: np.ndarray) -> Tuple[float, float]:
    """
    Both sides of the volume gauge identity for one state.

    Returns:
        (log of ∏_f q_f^{h(f)}, log of the product of s over thick edges)
    """
    q = gauge_face_weights(s_vertical, s_horizontal)
    lhs = float(np.sum(h.heights * np.log(q)))
    e = heights_to_edges(h)
    rhs = float(np.sum(e.vertical * np.log(s_vertical)) + np.sum(e.horizontal * np.log(s_horizontal)))
    return lhs, rhs


def vertex_index_at(heights: np.ndarray, a, b):
    """
    Index into ``VertexType.ordered()`` of vertex (a, b) read from a raw
    height table; -1 for an illegal pattern. Works elementwise on index arrays.
    """
    sw, se = heights[a, b], heights[a + 1, b]
    nw, ne = heights[a, b + 1], heights[a + 1, b + 1]
    edges = (nw - sw, se - sw, ne - se, ne - nw)
    valid = np.logical_and.reduce([(e == 0) | (e == 1) for e in edges])
    code = edges[0] + 2 * edges[1] + 4 * edges[2] + 8 * edges[3]
    return np.where(valid, _CODE_TABLE[np.clip(code, 0, 15)], -1)


_CODE_LIST = _CODE_TABLE.tolist()


def corner_index(sw: int, se: int, nw: int, ne: int) -> int:
    """Scalar ``vertex_index_at`` from the four face heights around a vertex."""
    w, s, e, n = nw - sw, se - sw, ne - se, ne - nw
    if w not in (0, 1) or s not in (0, 1) or e not in (0, 1) or n not in (0, 1):
        return -1
    return _CODE_LIST[w + 2 * s + 4 * e + 8 * n]
