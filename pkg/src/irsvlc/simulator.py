"""Monte Carlo engine: per-trial channel gains and symbol-error-rate curves.

Each trial draws an independent receiver pose and blocker population from a
substream keyed by (seed, trial index), so results do not depend on worker
count or execution order. Blockers occlude the direct source-detector link;
the diffuse wall field and the steered mirror cascade are treated as
blockage-insensitive at trial level (per-path occlusion stays available in
the channel and irs APIs). On-off keying over the sampled gain ensemble gives
SER(snr) = mean_t Q(sqrt(snr * h_t^2 / mean(h^2))), where the mean-square
gain normalization makes `snr` the average received electrical SNR.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.special import erfc

from .channel import PatchSet, diffuse_capture, los_gain, patch_incident_power, wall_patches
from .irs import ma_gain, msa_gain
from .scene import Scene, sample_blockers, sample_ue

SER_TARGET = 3.8e-3  # pre-FEC threshold used for required-SNR readouts
DEFAULT_SNR_GRID_DB = (0.0, 40.0, 1.0)


class Scenario(Enum):
    """Which propagation mechanisms contribute to the received signal."""

    LOS_ONLY = "los_only"
    LOS_NLOS = "los_nlos"
    LOS_NLOS_IRS = "los_nlos_irs"

    def effective_gain(self, trial: "TrialGains") -> float:
        if self is Scenario.LOS_ONLY:
            return trial.h_los
        if self is Scenario.LOS_NLOS:
            return trial.h_los + trial.h_nlos
        return trial.h_los + trial.h_nlos + trial.h_irs

    @classmethod
    def from_name(cls, name: str) -> "Scenario":
        for s in cls:
            if s.value == name:
                return s
        raise ValueError(f"unknown scenario {name!r}; expected one of "
                         f"{[s.value for s in cls]}")


@dataclass(frozen=True)
class TrialGains:
    """Channel gain components of one Monte Carlo trial."""

    index: int
    h_los: float
    h_nlos: float
    h_irs: float


@dataclass(frozen=True)
class SnrGrid:
    """Inclusive dB grid from start to stop in fixed steps."""

    start_db: float = DEFAULT_SNR_GRID_DB[0]
    stop_db: float = DEFAULT_SNR_GRID_DB[1]
    step_db: float = DEFAULT_SNR_GRID_DB[2]

    def __post_init__(self) -> None:
        if self.step_db <= 0:
            raise ValueError(f"grid step must be positive, got {self.step_db}")
        if self.stop_db < self.start_db:
            raise ValueError("grid stop lies below its start")

    def values(self) -> np.ndarray:
        n = int(math.floor((self.stop_db - self.start_db) / self.step_db + 1e-9)) + 1
        return self.start_db + self.step_db * np.arange(n)


@dataclass(frozen=True)
class SerCurve:
    """SER over an SNR grid for one scenario, with per-point standard errors."""

    scenario: Scenario
    snr_db: np.ndarray
    ser: np.ndarray
    stderr: np.ndarray
    trials: int
    seed: int | None = None


@dataclass(frozen=True)
class RequiredSnr:
    """Lowest SNR meeting a target SER; None when the curve never gets there."""

    snr_db: float | None
    non_monotone: bool = False

    @property
    def reachable(self) -> bool:
        return self.snr_db is not None


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Independent, reproducible substream for one trial."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                        spawn_key=(trial_index,)))


def compute_trial(scene: Scene, patches: PatchSet, diffuse_power: np.ndarray,
                  trial_index: int, seed: int) -> TrialGains:
    """Sample one receiver pose and blocker population, then all gain components."""
    rng = trial_rng(seed, trial_index)
    ue = sample_ue(rng, scene)
    # hard-core thinning: an object cannot occupy the receiver's location, and
    # a box enclosing the receiver would zero every path regardless of steering
    blockers = tuple(b for b in sample_blockers(rng, scene)
                     if not b.contains_interior(ue.position))
    # blockers model pedestrians crossing the direct link; the diffuse wall
    # field and the steered cascade are treated as blockage-insensitive at
    # trial level (per-path occlusion stays available in channel/irs)
    h_los = math.fsum(los_gain(ap, ue, blockers) for ap in scene.aps)
    h_nlos = diffuse_capture(patches, ue, diffuse_power)
    parts = [ma_gain(ap, arr, ue)
             for ap in scene.aps for arr in scene.mirror_arrays]
    parts += [msa_gain(ap, arr, ue)
              for ap in scene.aps for arr in scene.metasurface_arrays]
    return TrialGains(trial_index, h_los, h_nlos, math.fsum(parts))


def _diffuse_field(scene: Scene, patches: PatchSet, order: int) -> np.ndarray:
    """Per-patch incident power from every source, blockage-free by design."""
    total = np.zeros(len(patches))
    for ap in scene.aps:
        total = total + patch_incident_power(ap, patches, (), order=order)
    return total


# -- worker-pool plumbing ----------------------------------------------------

_WORKER_STATE: dict = {}


def _init_worker(scene: Scene, seed: int, patches: PatchSet,
                 diffuse_power: np.ndarray) -> None:
    _WORKER_STATE["scene"] = scene
    _WORKER_STATE["seed"] = seed
    _WORKER_STATE["patches"] = patches
    _WORKER_STATE["diffuse_power"] = diffuse_power


def _run_chunk(bounds: tuple[int, int]) -> list[TrialGains]:
    scene = _WORKER_STATE["scene"]
    seed = _WORKER_STATE["seed"]
    patches = _WORKER_STATE["patches"]
    power = _WORKER_STATE["diffuse_power"]
    return [compute_trial(scene, patches, power, t, seed) for t in range(*bounds)]


def run_trials(scene: Scene, trials: int, seed: int, *, threads: int = 1,
               nlos_patch_size: float = 0.25, nlos_order: int = 2) -> list[TrialGains]:
    """Run the Monte Carlo ensemble; identical output for any thread count.

    Trials are keyed by index, computed in contiguous chunks and reassembled
    in index order, so parallel scheduling cannot change the result. The
    diffuse wall field is precomputed once and shipped to workers, which both
    removes the dominant per-trial cost and keeps it bit-identical everywhere.
    """
    if trials < 1:
        raise ValueError(f"trial count must be >= 1, got {trials}")
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    patches = wall_patches(scene.room, nlos_patch_size, scene.wall_reflectivity)
    power = _diffuse_field(scene, patches, nlos_order)
    if threads <= 1 or trials == 1:
        return [compute_trial(scene, patches, power, t, seed)
                for t in range(trials)]
    chunk = max(1, math.ceil(trials / (threads * 8)))
    bounds = [(a, min(a + chunk, trials)) for a in range(0, trials, chunk)]
    with ProcessPoolExecutor(
            max_workers=threads, initializer=_init_worker,
            initargs=(scene, seed, patches, power)) as pool:
        parts = list(pool.map(_run_chunk, bounds))
    out: list[TrialGains] = []
    for part in parts:
        out.extend(part)
    return out


# -- SER estimation ----------------------------------------------------------


def q_function(x):
    """Gaussian tail probability Q(x) = P(N(0,1) > x); scalar in, scalar out."""
    q = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(q) if np.ndim(x) == 0 else q


def ser_curve(gains: Sequence[TrialGains], scenario: Scenario,
              grid: SnrGrid = SnrGrid(), *, seed: int | None = None,
              mean_square_gain: float | None = None) -> SerCurve:
    """OOK symbol error rate across the SNR grid for one scenario.

    Per-trial received SNR is the grid SNR scaled by h^2 / mean(h^2);
    mean_square_gain overrides the normalizer (for cross-scenario baselines).
    Trials with zero gain contribute Q(0) = 1/2, so blockage and orientation
    outage produce an error floor.
    """
    if not gains:
        raise ValueError("cannot estimate an SER curve from zero trials")
    h = np.array([scenario.effective_gain(g) for g in gains])
    h_sq = h * h
    norm = float(np.mean(h_sq)) if mean_square_gain is None else float(mean_square_gain)
    snr_db = grid.values()
    n = len(h)
    if norm == 0.0:
        ser = np.full(len(snr_db), 0.5)
        return SerCurve(scenario, snr_db, ser, np.zeros(len(snr_db)), n, seed)
    snr_lin = 10.0 ** (snr_db / 10.0)
    arg = np.sqrt(np.outer(snr_lin, h_sq / norm))
    q = 0.5 * erfc(arg / math.sqrt(2.0))
    ser = q.mean(axis=1)
    if n > 1:
        stderr = q.std(axis=1, ddof=1) / math.sqrt(n)
    else:
        stderr = np.zeros(len(snr_db))
    return SerCurve(scenario, snr_db, ser, stderr, n, seed)


def required_snr(curve: SerCurve, target: float = SER_TARGET) -> RequiredSnr:
    """Lowest SNR on (or interpolated between) grid points with SER <= target.

    Log-linear interpolation refines the crossing between the bracketing grid
    points. If the curve wiggles around the crossing the first crossing wins
    and the result is flagged.
    """
    if target <= 0:
        raise ValueError(f"target SER must be positive, got {target}")
    ser = curve.ser
    below = np.flatnonzero(ser <= target)
    if below.size == 0:
        return RequiredSnr(None, False)
    i = int(below[0])
    wiggle = bool(np.any(np.diff(ser[: min(len(ser), i + 2)]) > 0))
    if i == 0:
        return RequiredSnr(float(curve.snr_db[0]), wiggle)
    y0, y1 = float(ser[i - 1]), float(ser[i])
    s0, s1 = float(curve.snr_db[i - 1]), float(curve.snr_db[i])
    y1 = max(y1, 1e-15)  # SER can underflow to exactly zero at high SNR
    frac = (math.log(y0) - math.log(target)) / (math.log(y0) - math.log(y1))
    return RequiredSnr(s0 + frac * (s1 - s0), wiggle)
