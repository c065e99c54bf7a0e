"""Euler-Maruyama integration of complex Ito SDEs with real Wiener increments.

The integrator works on flat complex state vectors.  Drift and noise callables
must broadcast over a leading batch axis: drift maps (..., n) -> (..., n) and
noise maps (..., n) -> (..., n, m).  Ensembles are executed in path chunks so
that realizations vectorize, while every path still owns an independent
counter-based random stream keyed by (master_seed, path_index).  Statistics
are therefore independent of chunking and of the worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .errors import AllPathsDivergedError

DEFAULT_DIVERGENCE_THRESHOLD = 1e6
_DEFAULT_CHUNK = 256


@dataclass(frozen=True)
class TimeGrid:
    """Equidistant integration grid with steps+1 points on [t_start, t_end]."""

    t_start: float
    t_end: float
    steps: int

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError("steps must be a positive integer")
        object.__setattr__(self, "steps", int(self.steps))
        if not self.t_end > self.t_start:
            raise ValueError("need t_end > t_start")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / self.steps

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.steps + 1)


@dataclass(frozen=True)
class SdeSystem:
    """Ito SDE dX = drift(X) dt + noise(X) dW with m real Wiener components.

    ``constant_noise`` marks systems whose noise matrix does not depend on the
    state, letting the integrator evaluate it once per run.
    """

    dim: int
    noise_dim: int
    drift: Callable[[np.ndarray], np.ndarray]
    noise: Callable[[np.ndarray], np.ndarray]
    constant_noise: bool = False


class ObservableMap:
    """Named observables evaluated in one batched call per time step."""

    def __init__(self, names: Sequence[str], batch: Callable[[np.ndarray], np.ndarray]):
        self.names = tuple(names)
        self.batch = batch

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Callable]) -> "ObservableMap":
        names = tuple(mapping)
        fns = tuple(mapping[name] for name in names)

        def batch(state):
            return np.stack(
                [np.asarray(f(state), dtype=complex) for f in fns], axis=-1
            )

        return cls(names, batch)


def em_step(state, dt, dw, system: SdeSystem) -> np.ndarray:
    """One explicit Euler-Maruyama step; dw entries are N(0, dt) samples."""
    state = np.asarray(state, dtype=complex)
    dw = np.asarray(dw)
    b = np.asarray(system.noise(state), dtype=complex)
    kick = (b @ dw[..., None].astype(complex))[..., 0]
    return state + np.asarray(system.drift(state), dtype=complex) * dt + kick


def path_generator(master_seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for path ``index``; independent of scheduling."""
    master_seed = int(master_seed)
    if not 0 <= master_seed < 2**64:
        raise ValueError("master_seed must fit in an unsigned 64-bit integer")
    key = np.array([master_seed, int(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class SdePath(NamedTuple):
    times: np.ndarray
    states: np.ndarray
    diverged: bool
    diverged_step: Optional[int]


def _state_ok(state, threshold):
    mag = np.abs(state)
    return bool(np.isfinite(mag).all() and mag.max() <= threshold)


def simulate_path(
    system: SdeSystem,
    init,
    grid: TimeGrid,
    seed: int,
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD,
) -> SdePath:
    """Integrate a single realization; deterministic in (system, init, grid, seed).

    The returned state array has one row per grid point; rows after a
    divergence are filled with NaN and the path is flagged.
    """
    init = np.asarray(init, dtype=complex)
    if init.shape != (system.dim,):
        raise ValueError(f"init must have shape ({system.dim},)")
    rng = path_generator(seed, 0)
    dws = rng.standard_normal((grid.steps, system.noise_dim)) * np.sqrt(grid.dt)
    out = np.full((grid.steps + 1, system.dim), np.nan + 0j, dtype=complex)
    out[0] = init
    state = init
    diverged_step = None
    for k in range(grid.steps):
        with np.errstate(all="ignore"):
            state = em_step(state, grid.dt, dws[k], system)
        if not _state_ok(state, divergence_threshold):
            diverged_step = k + 1
            break
        out[k + 1] = state
    return SdePath(grid.times, out, diverged_step is not None, diverged_step)


@dataclass(frozen=True)
class EnsembleResult:
    """Per-observable ensemble means and standard errors on a time grid.

    ``stderr`` is the standard error of the complex sample mean, computed
    from the total (real plus imaginary) variance of the completed runs.
    Diverged paths are excluded from the statistics and listed by index.
    """

    grid: TimeGrid
    names: tuple[str, ...]
    mean: np.ndarray
    stderr: np.ndarray
    runs_requested: int
    runs_diverged: int
    diverged_paths: tuple[int, ...]

    @property
    def runs_completed(self) -> int:
        return self.runs_requested - self.runs_diverged

    def column(self, name: str):
        j = self.names.index(name)
        return self.mean[:, j], self.stderr[:, j]


def _integrate_chunk(system, inits, grid, dws, observable_map, threshold):
    """Vectorized Euler-Maruyama over one chunk of paths.

    Returns the (paths, points, observables) value array and the alive mask.
    Paths are latched dead on the first non-finite or over-threshold state.
    """
    steps, dt = grid.steps, grid.dt
    state = np.array(inits, dtype=complex)
    n_paths = state.shape[0]
    alive = np.ones(n_paths, dtype=bool)

    with np.errstate(all="ignore"):
        values = np.empty((n_paths, steps + 1, len(observable_map.names)), dtype=complex)
        values[:, 0, :] = observable_map.batch(state)
        const_noise = (
            np.asarray(system.noise(state), dtype=complex)
            if system.constant_noise
            else None
        )
        for k in range(steps):
            a = np.asarray(system.drift(state), dtype=complex)
            b = const_noise if const_noise is not None else np.asarray(
                system.noise(state), dtype=complex
            )
            state = state + a * dt + (b @ dws[:, k, :, None].astype(complex))[..., 0]
            mag_max = np.abs(state).max(axis=-1)
            alive &= np.isfinite(mag_max) & (mag_max <= threshold)
            values[:, k + 1, :] = observable_map.batch(state)
    return values, alive


def _merge_moments(n_a, mean_a, m2_a, n_b, mean_b, m2_b):
    if n_a == 0:
        return n_b, mean_b, m2_b
    if n_b == 0:
        return n_a, mean_a, m2_a
    n = n_a + n_b
    delta = mean_b - mean_a
    mean = mean_a + delta * (n_b / n)
    m2 = m2_a + m2_b + np.abs(delta) ** 2 * (n_a * n_b / n)
    return n, mean, m2


def run_ensemble(
    system: SdeSystem,
    init_sampler: Callable[[np.random.Generator], np.ndarray],
    grid: TimeGrid,
    runs: int,
    master_seed: int,
    observables,
    *,
    workers: int = 1,
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD,
    chunk_size: int = _DEFAULT_CHUNK,
) -> EnsembleResult:
    """Monte-Carlo ensemble of independent realizations.

    Path r draws its initial state and then its Wiener increments from the
    stream keyed by (master_seed, r), so results are reproducible and do not
    depend on ``workers``.  Accumulation merges chunk moments in ascending
    path order with the pairwise variance-combination rule.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if not isinstance(observables, ObservableMap):
        observables = ObservableMap.from_mapping(observables)
    names = observables.names
    shape = (grid.steps + 1, len(names))

    bounds = [
        (start, min(start + chunk_size, runs)) for start in range(0, runs, chunk_size)
    ]

    def work(bound):
        start, stop = bound
        gens = [path_generator(master_seed, r) for r in range(start, stop)]
        inits = np.stack([np.asarray(init_sampler(g), dtype=complex) for g in gens])
        if inits.shape[1] != system.dim:
            raise ValueError("init_sampler returned a vector of the wrong length")
        sqrt_dt = np.sqrt(grid.dt)
        dws = np.stack(
            [g.standard_normal((grid.steps, system.noise_dim)) for g in gens]
        ) * sqrt_dt
        values, alive = _integrate_chunk(
            system, inits, grid, dws, observables, divergence_threshold
        )
        kept = values[alive]
        count = kept.shape[0]
        if count:
            mean = kept.mean(axis=0)
            m2 = (np.abs(kept - mean) ** 2).sum(axis=0)
        else:
            mean = np.zeros(shape, dtype=complex)
            m2 = np.zeros(shape)
        diverged = tuple(int(start + i) for i in np.nonzero(~alive)[0])
        return count, mean, m2, diverged

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, bounds))
    else:
        results = [work(b) for b in bounds]

    total = 0
    mean = np.zeros(shape, dtype=complex)
    m2 = np.zeros(shape)
    diverged: list[int] = []
    for count, c_mean, c_m2, c_div in results:
        total, mean, m2 = _merge_moments(total, mean, m2, count, c_mean, c_m2)
        diverged.extend(c_div)

    if total == 0:
        raise AllPathsDivergedError(f"all {runs} requested paths diverged")
    if total > 1:
        stderr = np.sqrt(m2 / (total - 1) / total)
    else:
        stderr = np.zeros(shape)
    return EnsembleResult(
        grid=grid,
        names=names,
        mean=mean,
        stderr=stderr,
        runs_requested=runs,
        runs_diverged=runs - total,
        diverged_paths=tuple(diverged),
    )
