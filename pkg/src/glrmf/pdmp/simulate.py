"""Run configuration, event logs and the compiled simulation driver."""
from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..network import Interaction, ValidatedSpec, spec_to_dict, validate_spec
from . import _kernels
from .state import initial_potentials, out_edges


class Sampler(str, enum.Enum):
    THINNING = "thinning"
    QUEUE = "queue"


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    Args:
        replicas_M: number of replicas; ``1`` runs the plain network.
        horizon_T: simulated time.
        burn_in: transient discarded by estimators; defaults to ``0.2 * horizon_T``.
        seed: seed for ``numpy.random.default_rng``.
        initial_potentials: ``"resets"`` or one nonnegative value per neuron.
        sampler: thinning or the per-neuron queue.
        snapshot_dt: spacing of state snapshots (0 disables them).
    """
    replicas_M: int
    horizon_T: float
    seed: int
    burn_in: float | None = None
    initial_potentials: str | tuple = "resets"
    sampler: Sampler = Sampler.THINNING
    snapshot_dt: float = 0.0

    def __post_init__(self):
        if not isinstance(self.replicas_M, (int, np.integer)) or self.replicas_M < 1:
            raise ConfigError("replicas_M must be an integer >= 1")
        if not self.horizon_T > 0 or not np.isfinite(self.horizon_T):
            raise ConfigError("horizon_T must be positive and finite")
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", 0.2 * self.horizon_T)
        if not 0 <= self.burn_in < self.horizon_T:
            raise ConfigError("burn_in must lie in [0, horizon_T)")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.snapshot_dt < 0:
            raise ConfigError("snapshot_dt must be nonnegative")
        try:
            object.__setattr__(self, "sampler", Sampler(self.sampler))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not isinstance(self.initial_potentials, str):
            object.__setattr__(self, "initial_potentials",
                               tuple(float(v) for v in self.initial_potentials))

    def to_dict(self) -> dict:
        return {
            "replicas_M": int(self.replicas_M),
            "horizon_T": float(self.horizon_T),
            "burn_in": float(self.burn_in),
            "seed": int(self.seed),
            "initial_potentials": self.initial_potentials if isinstance(
                self.initial_potentials, str) else list(self.initial_potentials),
            "sampler": self.sampler.value,
            "snapshot_dt": float(self.snapshot_dt),
        }


def config_hash(spec, sim: SimConfig) -> str:
    doc = {"spec": spec_to_dict(spec), "sim": sim.to_dict()}
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class EventLog:
    """Spike records with 0-based replica/neuron indices (1-based on disk)."""
    times: np.ndarray
    replicas: np.ndarray
    neurons: np.ndarray
    n: int
    M: int
    horizon: float
    burn_in: float
    seed: int
    config_hash: str = ""
    clip_count: int = 0
    extinction_time: float | None = None
    snapshot_dt: float = 0.0
    snapshots: np.ndarray = field(default_factory=lambda: np.empty((0, 0, 0)))
    final_potentials: np.ndarray | None = None
    final_rate_cache: float | None = None

    def __len__(self):
        return len(self.times)

    @property
    def snapshot_times(self) -> np.ndarray:
        return np.arange(len(self.snapshots)) * self.snapshot_dt

    def metadata(self) -> dict:
        return {
            "seed": int(self.seed),
            "config_hash": self.config_hash,
            "clip_count": int(self.clip_count),
            "extinction_time": self.extinction_time,
            "horizon": self.horizon,
            "burn_in": self.burn_in,
            "M": self.M,
            "n": self.n,
            "n_events": len(self),
        }

    def to_csv(self) -> str:
        lines = ["time,replica,neuron"]
        lines += [f"{t:.15g},{m + 1},{i + 1}"
                  for t, m, i in zip(self.times.tolist(), self.replicas.tolist(),
                                     self.neurons.tolist())]
        return "\n".join(lines) + "\n"

    def write(self, csv_path, meta_path=None):
        with open(csv_path, "w") as fh:
            fh.write(self.to_csv())
        meta_path = meta_path or f"{csv_path}.json"
        with open(meta_path, "w") as fh:
            json.dump(self.metadata(), fh, indent=2, sort_keys=True)
        return meta_path

    @classmethod
    def read(cls, csv_path, meta_path=None) -> "EventLog":
        meta_path = meta_path or f"{csv_path}.json"
        with open(meta_path) as fh:
            meta = json.load(fh)
        data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
        if data.size == 0:
            data = np.empty((0, 3))
        return cls(times=data[:, 0], replicas=data[:, 1].astype(int) - 1,
                   neurons=data[:, 2].astype(int) - 1, n=meta["n"], M=meta["M"],
                   horizon=meta["horizon"], burn_in=meta["burn_in"], seed=meta["seed"],
                   config_hash=meta["config_hash"], clip_count=meta["clip_count"],
                   extinction_time=meta["extinction_time"])


def simulate(spec, sim: SimConfig) -> EventLog:
    """Simulate the M-replica dynamics up to the horizon or extinction.

    The result is a deterministic function of ``(spec, sim)``.

    Raises:
        ConfigError: invalid initial potentials.
    """
    vspec = spec if isinstance(spec, ValidatedSpec) else validate_spec(spec)
    M = int(sim.replicas_M)
    try:
        x0 = initial_potentials(vspec, M, sim.initial_potentials)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    ptr, idx, w = out_edges(vspec)
    s = vspec.spec
    run = _kernels.run_queue if sim.sampler is Sampler.QUEUE else _kernels.run_thinning
    rng = np.random.default_rng(int(sim.seed))
    cap = max(1024, int(2 * M * s.reset.sum() * sim.horizon_T) + 16)
    times, reps, neus, clips, extinct, snaps, x_end, cached = run(
        rng, x0, s.drift.astype(float), s.reset.astype(float), s.offset.astype(float),
        s.exponent.astype(float), vspec.interaction is Interaction.RNORM,
        ptr, idx, w, float(sim.horizon_T), float(sim.snapshot_dt), cap)
    return EventLog(
        times=times.copy(), replicas=reps.astype(np.int64), neurons=neus.astype(np.int64),
        n=vspec.n, M=M, horizon=float(sim.horizon_T), burn_in=float(sim.burn_in),
        seed=int(sim.seed), config_hash=config_hash(vspec, sim), clip_count=int(clips),
        extinction_time=None if np.isnan(extinct) else float(extinct),
        snapshot_dt=float(sim.snapshot_dt), snapshots=snaps.copy(),
        final_potentials=x_end.copy(), final_rate_cache=float(cached))
