"""
Metropolis sampling of height functions under the q^vol-weighted six-vertex measure.

Moves raise or lower the height of one inner face by 1 (an elementary
fluctuation of the paths). The outer faces never change. Randomness comes
from a Philox generator keyed by (seed, stream), so independent chains with
different stream ids are reproducible and their estimators can be merged.
"""

import json
import logging
import math
import re
from collections import Counter, deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..utils.errors import LatticeError, NotConverged, NumericalError
from .lattice import (
    BoundaryValue,
    HeightFunction,
    corner_index,
    log_state_weight,
    min_height,
    state_weight,
    vertex_index_at,
)
from .params import ModelParams, VertexWeights

logger = logging.getLogger(__name__)

Edge = Tuple[str, int, int]
EdgePair = Tuple[Edge, Edge]

MODES = ("random", "colored")
DEFAULT_BATCHES = 32
MIN_EFFECTIVE_SAMPLES = 50


def q_from_lambda(lam: float, n: int) -> float:
    """Volume weight q = e^{−λ/N}; λ > 0 favors small volume like the variational term +λ∫φ."""
    return math.exp(-lam / n)


def _exact(x):
    return Fraction(x) if isinstance(x, int) else x


def _weight_tuple(weights: Union[ModelParams, VertexWeights, Sequence]) -> tuple:
    if isinstance(weights, ModelParams):
        weights = weights.weights()
    if isinstance(weights, VertexWeights):
        weights = weights.as_tuple()
    values = tuple(_exact(w) for w in weights)
    if len(values) != 6:
        raise ValueError(f"Expected six vertex weights, got {len(values)}")
    return values


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


def _vertex_grid(n: int, m: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.meshgrid(np.arange(n), np.arange(m), indexing="ij")


def _corner_codes(patch: List[List[int]], x: int) -> Tuple[int, int, int, int]:
    """
    Codes of the vertices (i−1, j−1), (i−1, j), (i, j−1), (i, j) around face
    (i, j) when its height is x; ``patch`` holds heights[i−1:i+2, j−1:j+2].
    """
    (a0, a1, a2), (b0, _, b2), (c0, c1, c2) = patch
    return (corner_index(a0, b0, a1, x),
            corner_index(a1, x, a2, b2),
            corner_index(b0, c0, x, c1),
            corner_index(x, c1, b2, c2))


@dataclass(eq=False)
class ChainState:
    """
    Mutable state of one chain.

    ``codes`` caches the vertex type index of every vertex and
    ``log_weight`` the log of q^vol times the vertex weight product; both are
    updated incrementally on every accepted flip.
    """
    weights: tuple
    q: Union[float, Fraction]
    heights: np.ndarray
    codes: np.ndarray
    log_weight: float
    rng: np.random.Generator
    seed: int
    stream: int = 0
    steps: int = 0
    log_w: np.ndarray = field(init=False, repr=False)
    log_q: float = field(init=False, repr=False)

    def __post_init__(self):
        with np.errstate(divide="ignore"):
            self.log_w = np.log(np.array([float(w) for w in self.weights]))
        self.log_q = math.log(float(self.q))

    @classmethod
    def create(cls, weights: Union[ModelParams, VertexWeights, Sequence], q, h: HeightFunction,
               seed: int, stream: int = 0) -> "ChainState":
        """Start a chain at ``h``."""
        if not float(q) > 0:
            raise ValueError(f"q must be positive, got {q}")
        w = _weight_tuple(weights)
        heights = np.array(h.heights, dtype=np.int64)
        state = cls(weights=w, q=_exact(q), heights=heights, codes=np.zeros((h.n, h.m), dtype=np.int64),
                    log_weight=0.0, rng=_rng(seed, stream), seed=seed, stream=stream)
        state.codes, state.log_weight = state.recompute()
        return state

    @property
    def n(self) -> int:
        return self.heights.shape[0] - 1

    @property
    def m(self) -> int:
        return self.heights.shape[1] - 1

    def height_function(self) -> HeightFunction:
        return HeightFunction(n=self.n, m=self.m, heights=self.heights.copy())

    def recompute(self) -> Tuple[np.ndarray, float]:
        """Vertex codes and log-weight from scratch."""
        a, b = _vertex_grid(self.n, self.m)
        codes = vertex_index_at(self.heights, a, b)
        if np.any(codes < 0):
            raise LatticeError("Chain state holds an illegal vertex")
        vol = int(self.heights[1:self.n, 1:self.m].sum())
        return codes, float(self.log_w[codes].sum() + vol * self.log_q)

    def check(self, tol: float = 1e-9) -> None:
        """
        Compare the caches with a full recomputation.

        Raises:
            LatticeError: If the cached vertex types disagree with the heights
            NumericalError: If the log-weight drifted by more than ``tol``
        """
        codes, log_weight = self.recompute()
        if not np.array_equal(codes, self.codes):
            raise LatticeError("Cached vertex types disagree with the height table")
        drift = abs(log_weight - self.log_weight)
        if drift > tol:
            raise NumericalError(f"Log-weight drifted by {drift:.3e}")


def _check_face(state: ChainState, face: Tuple[int, int]) -> Tuple[int, int]:
    i, j = face
    if not (1 <= i < state.n and 1 <= j < state.m):
        raise LatticeError(f"Face {face} is not an inner face of a {state.n}x{state.m} lattice")
    return i, j


def _flip_codes(state: ChainState, i: int, j: int, direction: int):
    patch = state.heights[i - 1:i + 2, j - 1:j + 2].tolist()
    new = _corner_codes(patch, patch[1][1] + direction)
    if min(new) < 0:
        return None, None
    old = state.codes[i - 1:i + 1, j - 1:j + 1].ravel().tolist()
    return old, list(new)


def flip_proposal(state: ChainState, face: Tuple[int, int], direction: int = 1):
    """
    Metropolis ratio of raising (direction +1) or lowering (−1) one inner face.

    The ratio is q^{±1} times the weights of the four surrounding vertices
    after the move over those before it, computed exactly when the weights
    and q are rational. Moves that break the unit-step rule have ratio 0.

    Raises:
        LatticeError: If ``face`` is not an inner face
    """
    i, j = _check_face(state, face)
    if direction not in (1, -1):
        raise ValueError(f"direction must be ±1, got {direction}")
    old, new = _flip_codes(state, i, j, direction)
    if new is None:
        return 0
    w = state.weights
    ratio = state.q ** direction
    for k in new:
        ratio *= w[k]
    for k in old:
        ratio /= w[k]
    return ratio


def apply_flip(state: ChainState, face: Tuple[int, int], direction: int) -> bool:
    """Perform a flip unconditionally if it is legal; False if it is not."""
    i, j = _check_face(state, face)
    old, new = _flip_codes(state, i, j, direction)
    if new is None:
        return False
    _commit(state, i, j, direction, old, new)
    return True


def _commit(state: ChainState, i: int, j: int, direction: int, old, new) -> None:
    state.heights[i, j] += direction
    state.codes[i - 1:i + 1, j - 1:j + 1] = np.array(new).reshape(2, 2)
    state.log_weight += direction * state.log_q + float(state.log_w[new].sum() - state.log_w[old].sum())


def _random_sweep(state: ChainState) -> Tuple[int, int]:
    n_inner_i, n_inner_j = state.n - 1, state.m - 1
    size = n_inner_i * n_inner_j
    if size == 0:
        return 0, 0
    rng = state.rng
    faces = rng.integers(0, size, size=size)
    dirs = 2 * rng.integers(0, 2, size=size) - 1
    us = rng.random(size)
    accepted = 0
    for f, d, u in zip(faces.tolist(), dirs.tolist(), us.tolist()):
        i, j = 1 + f // n_inner_j, 1 + f % n_inner_j
        old, new = _flip_codes(state, i, j, d)
        if new is None:
            continue
        log_ratio = d * state.log_q + float(state.log_w[new].sum() - state.log_w[old].sum())
        if log_ratio >= 0 or u < math.exp(log_ratio):
            _commit(state, i, j, d, old, new)
            accepted += 1
    return size, accepted


def _colour_classes(n: int, m: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Inner faces grouped by (i mod 2, j mod 2); faces in one class share no vertex."""
    ii, jj = np.meshgrid(np.arange(1, n), np.arange(1, m), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    classes = []
    for pi in (0, 1):
        for pj in (0, 1):
            mask = (ii % 2 == pi) & (jj % 2 == pj)
            if mask.any():
                classes.append((ii[mask], jj[mask]))
    return classes


def _colored_sweep(state: ChainState, classes) -> Tuple[int, int]:
    proposed = accepted = 0
    h = state.heights
    rng = state.rng
    for I, J in classes:
        k = len(I)
        d = 2 * rng.integers(0, 2, size=k) - 1
        u = rng.random(k)
        target = h[I, J] + d
        va = np.stack([I - 1, I - 1, I, I])
        vb = np.stack([J - 1, J, J - 1, J])
        trial = h.copy()
        trial[I, J] = target
        new = vertex_index_at(trial, va, vb)
        old = state.codes[va, vb]
        ok = np.all(new >= 0, axis=0)
        safe = np.where(new >= 0, new, 0)
        with np.errstate(invalid="ignore"):
            log_ratio = d * state.log_q + state.log_w[safe].sum(axis=0) - state.log_w[old].sum(axis=0)
            take = ok & (u < np.exp(np.minimum(log_ratio, 0.0)))
        h[I[take], J[take]] = target[take]
        state.codes[va[:, take], vb[:, take]] = new[:, take]
        state.log_weight += float(log_ratio[take].sum())
        proposed += k
        accepted += int(take.sum())
    return proposed, accepted


def _edge_index(edge: Edge, n: int, m: int) -> int:
    kind, i, j = edge
    if kind == "v" and 0 <= i < n and 0 <= j <= m:
        return i * (m + 1) + j
    if kind == "h" and 0 <= i <= n and 0 <= j < m:
        return n * (m + 1) + i * m + j
    raise LatticeError(f"Edge {edge} is not on a {n}x{m} lattice")


@dataclass(eq=False)
class EstimatorSet:
    """
    Running sums of the chain observables.

    Each sample is one vector: heights of all faces, occupations of the
    vertical then horizontal edges, then the requested edge-pair products.
    Full batches of ``batch_size`` samples are kept for batch-means errors.
    """
    n: int
    m: int
    pairs: Tuple[EdgePair, ...] = ()
    batch_size: int = 1
    track_states: bool = False
    count: int = 0
    sums: Optional[np.ndarray] = None
    batches: List[np.ndarray] = field(default_factory=list)
    batch_counts: List[int] = field(default_factory=list)
    volumes: Dict[int, List[int]] = field(default_factory=dict)
    state_counts: Counter = field(default_factory=Counter)
    state_batches: List[Counter] = field(default_factory=list)
    proposed: int = 0
    accepted: int = 0

    def __post_init__(self):
        self.pairs = tuple((tuple(a), tuple(b)) for a, b in self.pairs)
        self._pair_index = np.array([[_edge_index(a, self.n, self.m), _edge_index(b, self.n, self.m)]
                                     for a, b in self.pairs], dtype=np.int64).reshape(-1, 2)
        if self.sums is None:
            self.sums = np.zeros(self.width)
        self._batch = np.zeros(self.width)
        self._batch_n = 0
        self._batch_states: Counter = Counter()

    @property
    def width(self) -> int:
        n, m = self.n, self.m
        return (n + 1) * (m + 1) + n * (m + 1) + (n + 1) * m + len(self.pairs)

    def _slices(self):
        n, m = self.n, self.m
        a = (n + 1) * (m + 1)
        b = a + n * (m + 1)
        c = b + (n + 1) * m
        return slice(0, a), slice(a, b), slice(b, c), slice(c, None)

    def record(self, heights: np.ndarray, stream: int = 0) -> None:
        """Add one sample taken from a height table."""
        edges = np.concatenate([np.diff(heights, axis=0).ravel(), np.diff(heights, axis=1).ravel()])
        pair_values = edges[self._pair_index[:, 0]] * edges[self._pair_index[:, 1]]
        x = np.concatenate([heights.ravel(), edges, pair_values]).astype(float)
        self.sums += x
        self.count += 1
        self._batch += x
        self._batch_n += 1
        self.volumes.setdefault(stream, []).append(int(heights[1:self.n, 1:self.m].sum()))
        if self.track_states:
            key = tuple(int(v) for v in heights.ravel())
            self.state_counts[key] += 1
            self._batch_states[key] += 1
        if self._batch_n >= self.batch_size:
            self.batches.append(self._batch.copy())
            self.batch_counts.append(self._batch_n)
            self.state_batches.append(self._batch_states)
            self._batch = np.zeros(self.width)
            self._batch_n = 0
            self._batch_states = Counter()

    def _means(self) -> np.ndarray:
        if self.count == 0:
            raise NotConverged("No samples were recorded")
        return self.sums / self.count

    def stderr_vector(self) -> np.ndarray:
        """Batch-means standard errors of every observable; NaN with fewer than two batches."""
        if len(self.batches) < 2:
            return np.full(self.width, np.nan)
        means = np.array(self.batches) / np.array(self.batch_counts, dtype=float)[:, None]
        return means.std(axis=0, ddof=1) / math.sqrt(len(means))

    def mean_heights(self) -> np.ndarray:
        s, _, _, _ = self._slices()
        return self._means()[s].reshape(self.n + 1, self.m + 1)

    def height_stderr(self) -> np.ndarray:
        s, _, _, _ = self._slices()
        return self.stderr_vector()[s].reshape(self.n + 1, self.m + 1)

    def edge_means(self) -> Tuple[np.ndarray, np.ndarray]:
        """⟨σ_e⟩ for vertical edges (N, M+1) and horizontal edges (N+1, M)."""
        _, sv, sh, _ = self._slices()
        mean = self._means()
        return mean[sv].reshape(self.n, self.m + 1), mean[sh].reshape(self.n + 1, self.m)

    def edge_stderr(self) -> Tuple[np.ndarray, np.ndarray]:
        _, sv, sh, _ = self._slices()
        err = self.stderr_vector()
        return err[sv].reshape(self.n, self.m + 1), err[sh].reshape(self.n + 1, self.m)

    def pair_means(self) -> np.ndarray:
        *_, sp = self._slices()
        return self._means()[sp]

    def pair_stderr(self) -> np.ndarray:
        *_, sp = self._slices()
        return self.stderr_vector()[sp]

    @property
    def acceptance(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0

    def merge(self, other: "EstimatorSet") -> "EstimatorSet":
        """
        Combine two independent chains into a new set.

        Raises:
            ValueError: If the lattices or pairs differ or a stream id appears in both
        """
        if (self.n, self.m, self.pairs) != (other.n, other.m, other.pairs):
            raise ValueError("Estimator sets describe different observables")
        shared = set(self.volumes) & set(other.volumes)
        if shared:
            raise ValueError(f"Stream ids {sorted(shared)} appear in both estimator sets")
        merged = EstimatorSet(n=self.n, m=self.m, pairs=self.pairs, batch_size=self.batch_size,
                              track_states=self.track_states and other.track_states)
        merged.count = self.count + other.count
        merged.sums = self.sums + other.sums
        merged.batches = self.batches + other.batches
        merged.batch_counts = self.batch_counts + other.batch_counts
        merged.volumes = {**self.volumes, **other.volumes}
        merged.state_counts = self.state_counts + other.state_counts
        merged.state_batches = self.state_batches + other.state_batches
        merged.proposed = self.proposed + other.proposed
        merged.accepted = self.accepted + other.accepted
        return merged

    def rows(self, normalize: bool = True) -> List[Tuple[float, float, float, float]]:
        """(x, y, mean_h, stderr) per face; unit-square coordinates and h/N when ``normalize``."""
        mean, err = self.mean_heights(), self.height_stderr()
        scale = float(self.n) if normalize else 1.0
        out = []
        for i in range(self.n + 1):
            for j in range(self.m + 1):
                x, y = (i / self.n, j / self.n) if normalize else (i, j)
                out.append((x, y, mean[i, j] / scale, err[i, j] / scale))
        return out

    def summary(self) -> dict:
        v, h = self.edge_means()
        return {
            "n": self.n,
            "m": self.m,
            "samples": self.count,
            "batches": len(self.batches),
            "acceptance": self.acceptance,
            "streams": sorted(self.volumes),
            "autocorrelation": {str(k): tau for k, tau in autocorrelation(self).items()},
            "mean_volume": float(np.mean([x for s in self.volumes.values() for x in s])) if self.count else None,
            "vertical_edges": v.tolist(),
            "horizontal_edges": h.tolist(),
            "pairs": [{"edges": [list(a), list(b)], "mean": float(mu), "stderr": float(e)}
                      for (a, b), mu, e in zip(self.pairs, self.pair_means(), self.pair_stderr())],
        }


def advance(state: ChainState, sweeps: int, mode: str = "random", est: Optional[EstimatorSet] = None,
            thin: int = 1) -> None:
    """
    Run ``sweeps`` sweeps, recording into ``est`` every ``thin`` sweeps.

    A random sweep makes one proposal per inner face at uniformly chosen
    faces; a colored sweep proposes a move at every inner face, one
    vertex-disjoint class at a time.
    """
    if mode not in MODES:
        raise ValueError(f"Unknown sweep mode {mode!r}, expected one of {MODES}")
    classes = _colour_classes(state.n, state.m) if mode == "colored" else None
    for sweep in range(sweeps):
        if classes is None:
            proposed, accepted = _random_sweep(state)
        else:
            proposed, accepted = _colored_sweep(state, classes)
        state.steps += 1
        if est is not None:
            est.proposed += proposed
            est.accepted += accepted
            if (sweep + 1) % thin == 0:
                est.record(state.heights, state.stream)


def run_chain(p: Union[ModelParams, VertexWeights, Sequence], q, b: BoundaryValue, steps: int, seed: int,
              stream: int = 0, burn_in: Optional[int] = None, thin: int = 1, mode: str = "random",
              pairs: Sequence[EdgePair] = (), track_states: bool = False, n_batches: int = DEFAULT_BATCHES,
              start: Optional[HeightFunction] = None, check_every: int = 0) -> EstimatorSet:
    """
    Sample the q^vol-weighted measure with fixed boundary ``b``.

    Args:
        p: model parameters or six explicit weights
        q: volume weight
        b: boundary value
        steps: sweeps after burn-in
        seed: generator seed; with ``stream`` it fixes the whole run
        burn_in: sweeps discarded first, default 10·N²
        thin: sweeps between samples
        mode: "random" or "colored"
        pairs: edge pairs (("v"|"h", i, j), ("v"|"h", i, j)) whose joint occupation is estimated
        track_states: count visits per state (small lattices)
        n_batches: target number of batches for the error estimates
        start: initial height function, default the minimal completion of ``b``
        check_every: verify the cached state every so many sweeps, 0 to skip

    Returns:
        EstimatorSet of the run
    """
    if steps < 0 or thin < 1:
        raise ValueError(f"Need steps >= 0 and thin >= 1, got steps={steps}, thin={thin}")
    h0 = start if start is not None else min_height(b)
    state = ChainState.create(p, q, h0, seed, stream)
    burn = 10 * b.n * b.n if burn_in is None else burn_in
    samples = steps // thin
    est = EstimatorSet(n=b.n, m=b.m, pairs=tuple(pairs), batch_size=max(1, samples // max(1, n_batches)),
                       track_states=track_states)
    logger.info(f"Chain {seed}/{stream}: {b.n}x{b.m} lattice, q={float(q):.6g}, {burn} burn-in and {steps} sweeps ({mode})")
    advance(state, burn, mode)
    chunk = check_every if check_every > 0 else steps
    done = 0
    while done < steps:
        todo = min(chunk, steps - done)
        advance(state, todo, mode, est, thin)
        done += todo
        if check_every > 0:
            state.check()
    if est.proposed and est.accepted == 0:
        logger.warning(f"Chain {seed}/{stream} accepted no moves")
    logger.info(f"Chain {seed}/{stream} finished: {est.count} samples, acceptance {est.acceptance:.3f}")
    return est


def integrated_autocorrelation(series: Sequence[float], c: float = 5.0) -> float:
    """
    Integrated autocorrelation time τ = 1 + 2Σρ(t) with Sokal's automatic
    window: the sum stops at the first M with M >= c·τ(M). Constant series give 1.
    """
    x = np.asarray(series, dtype=float)
    n = len(x)
    if n < 2:
        return 1.0
    x = x - x.mean()
    if not np.any(x):
        return 1.0
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, n=size)
    acf = np.fft.irfft(f * np.conjugate(f), n=size)[:n]
    acf /= acf[0]
    taus = 2.0 * np.cumsum(acf) - 1.0
    inside = np.arange(n) < c * taus
    window = int(np.argmin(inside)) if not inside.all() else n - 1
    return float(taus[window])


def autocorrelation(est: EstimatorSet, c: float = 5.0) -> Dict[int, float]:
    """τ of the volume series of every stream."""
    return {stream: integrated_autocorrelation(series, c) for stream, series in est.volumes.items()}


def effective_samples(est: EstimatorSet, c: float = 5.0) -> float:
    taus = autocorrelation(est, c)
    return float(sum(len(est.volumes[s]) / max(tau, 1.0) for s, tau in taus.items()))


def mean_height_field(est: EstimatorSet, n: Optional[int] = None, min_effective: float = MIN_EFFECTIVE_SAMPLES,
                      threshold: float = 50.0, c: float = 5.0) -> np.ndarray:
    """
    (1/N)·⟨h⟩ on the faces, comparable to a limit-shape field on the unit square.

    Args:
        est: chain estimators
        n: normalization, default the lattice size
        min_effective: fewest effective samples accepted
        threshold: warn when a stream is shorter than this many autocorrelation times

    Raises:
        NotConverged: If the effective sample size is below ``min_effective``
    """
    taus = autocorrelation(est, c)
    for stream, tau in taus.items():
        if len(est.volumes[stream]) < threshold * tau:
            logger.warning(f"Stream {stream}: {len(est.volumes[stream])} samples is under {threshold:g}·τ (τ={tau:.1f})")
    ess = effective_samples(est, c)
    if ess < min_effective:
        logger.error(f"Effective sample size {ess:.1f} below {min_effective:g}")
        raise NotConverged(f"Effective sample size {ess:.1f} below {min_effective:g}")
    return est.mean_heights() / float(n or est.n)


def state_frequencies(est: EstimatorSet, states: Sequence[HeightFunction]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Visit frequency of each state with its batch-means standard error.

    Raises:
        ValueError: If the chain did not track states
    """
    if not est.track_states:
        raise ValueError("Chain was run without track_states")
    keys = [tuple(int(v) for v in h.heights.ravel()) for h in states]
    freq = np.array([est.state_counts[k] / est.count for k in keys])
    if len(est.state_batches) < 2:
        return freq, np.full(len(keys), np.nan)
    counts = np.array(est.batch_counts, dtype=float)
    per_batch = np.array([[batch[k] for k in keys] for batch in est.state_batches]) / counts[:, None]
    return freq, per_batch.std(axis=0, ddof=1) / math.sqrt(len(counts))


def exact_frequencies(states: Sequence[HeightFunction], weights, q=1) -> List:
    """Normalized weights of an enumerated state list, exact for rational input."""
    w = _weight_tuple(weights)
    vw = VertexWeights(*w)
    values = [state_weight(h, vw, _exact(q)) for h in states]
    total = sum(values)
    return [v / total for v in values]


def flip_graph_connected(states: Sequence[HeightFunction]) -> bool:
    """True if every state is reachable from the first by single-face ±1 moves inside the list."""
    if not states:
        return True
    keys = {h.heights.tobytes(): k for k, h in enumerate(states)}
    seen = {0}
    queue = deque([0])
    while queue:
        h = states[queue.popleft()]
        for i in range(1, h.n):
            for j in range(1, h.m):
                for d in (1, -1):
                    t = np.array(h.heights)
                    t[i, j] += d
                    k = keys.get(t.tobytes())
                    if k is not None and k not in seen:
                        seen.add(k)
                        queue.append(k)
    logger.debug(f"Flip graph: reached {len(seen)} of {len(states)} states")
    return len(seen) == len(states)


def _to_jsonable(obj):
    if isinstance(obj, np.ndarray):
        return {"__array__": obj.tolist(), "dtype": str(obj.dtype)}
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _from_jsonable(obj):
    if isinstance(obj, dict):
        if "__array__" in obj:
            return np.array(obj["__array__"], dtype=obj["dtype"])
        return {k: _from_jsonable(v) for k, v in obj.items()}
    return obj


def _parse_number(text: str):
    return Fraction(text) if re.fullmatch(r"-?\d+(/\d+)?", text) else float(text)


def checkpoint(state: ChainState) -> str:
    """JSON snapshot of a chain: height function, weights, q and generator state."""
    return json.dumps({
        "height": json.loads(state.height_function().to_json()),
        "weights": [str(w) for w in state.weights],
        "q": str(state.q),
        "seed": state.seed,
        "stream": state.stream,
        "steps": state.steps,
        "rng": _to_jsonable(state.rng.bit_generator.state),
    })


def restore(text: str) -> ChainState:
    """Rebuild a chain from ``checkpoint`` output; it continues exactly where it stopped."""
    data = json.loads(text)
    h = HeightFunction.from_json(json.dumps(data["height"]))
    weights = [_parse_number(w) for w in data["weights"]]
    state = ChainState.create(weights, _parse_number(data["q"]), h, int(data["seed"]), int(data["stream"]))
    state.rng.bit_generator.state = _from_jsonable(data["rng"])
    state.steps = int(data["steps"])
    return state


def log_weight_of(h: HeightFunction, weights, q=1.0) -> float:
    """Log-weight of a state as the chain defines it."""
    return log_state_weight(h, VertexWeights(*[float(w) for w in _weight_tuple(weights)]), float(q))
