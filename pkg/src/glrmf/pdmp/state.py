"""Step-level PDMP dynamics in plain Python.

:class:`ReplicaState` exposes the individual operations of the M-replica
process (flow, next event, spike) for inspection and testing; long runs go
through :func:`glrmf.pdmp.simulate`, which uses the compiled kernels but
draws random numbers in the same order.
"""
from __future__ import annotations

import math

import numpy as np

from ..network import Interaction, NeuronParams, ValidatedSpec, validate_spec
from ..rmf import effective_weight

EXTINCT = "extinct"


def intensity(x, params: NeuronParams):
    """Spiking rate ``x**exponent + z`` at potential ``x >= 0``."""
    p = params.intensity_exponent_r
    lead = x if p == 1.0 else np.power(x, p)
    return lead + params.intensity_offset_z


def out_edges(spec: ValidatedSpec):
    """CSR out-edges; r-norm weights are mapped to ``sign(w) |w|**p_target``."""
    ptr = np.zeros(spec.n + 1, dtype=np.int64)
    idx, wts = [], []
    rnorm = spec.interaction is Interaction.RNORM
    for i, row in enumerate(spec.spec.weights):
        for j, w in row:
            idx.append(j)
            wts.append(effective_weight(w, spec.params[j].intensity_exponent_r) if rnorm else w)
        ptr[i + 1] = len(idx)
    return ptr, np.array(idx, dtype=np.int64), np.array(wts, dtype=float)


def initial_potentials(spec: ValidatedSpec, M: int, initial="resets") -> np.ndarray:
    if isinstance(initial, str):
        if initial != "resets":
            raise ValueError(f"unknown initial condition {initial!r}")
        row = np.array([p.reset_r for p in spec.params])
    else:
        row = np.asarray(initial, dtype=float)
        if row.shape != (spec.n,) or np.any(row < 0):
            raise ValueError("initial potentials must be n nonnegative values")
    return np.tile(row, (M, 1))


class ReplicaState:
    """Potentials of ``M`` replicas of an ``n``-neuron network.

    ``potentials[m, i]`` holds the value at time ``last_update[m, i]``; the
    decay flow is applied lazily. Per-neuron power sums are kept at a common
    reference time so the total rate is available in O(n).
    """

    def __init__(self, spec, M: int = 1, initial="resets"):
        self.spec = spec if isinstance(spec, ValidatedSpec) else validate_spec(spec)
        if M < 1:
            raise ValueError("M must be >= 1")
        self.M = M
        n = self.spec.n
        self.potentials = initial_potentials(self.spec, M, initial)
        self.last_update = np.zeros((M, n))
        self.now = 0.0
        self.clip_count = 0
        self._a = self.spec.spec.drift
        self._r = self.spec.spec.reset
        self._z = self.spec.spec.offset
        self._p = self.spec.spec.exponent
        self._rnorm = self.spec.interaction is Interaction.RNORM
        self._ptr, self._idx, self._w = out_edges(self.spec)
        self._colsum = np.array([np.sum(self._lead(self.potentials[:, i], i)) for i in range(n)])
        self._tcol = np.zeros(n)

    def _lead(self, x, i):
        p = self._p[i]
        return x if p == 1.0 else np.power(x, p)

    def value(self, m: int, i: int, t: float | None = None) -> float:
        t = self.now if t is None else t
        return float(self.potentials[m, i] * math.exp(-self._a[i] * (t - self.last_update[m, i])))

    def potentials_at(self, t: float | None = None) -> np.ndarray:
        """All potentials flowed to time ``t`` (default: now)."""
        t = self.now if t is None else t
        return self.potentials * np.exp(-self._a[None, :] * (t - self.last_update))

    def column_rate(self, i: int, t: float | None = None) -> float:
        t = self.now if t is None else t
        decay = math.exp(-self._p[i] * self._a[i] * (t - self._tcol[i]))
        return float(self._colsum[i] * decay + self.M * self._z[i])

    @property
    def total_rate_cache(self) -> float:
        return float(sum(self.column_rate(i) for i in range(self.spec.n)))

    def total_rate(self, t: float | None = None) -> float:
        """Exact recomputation of the summed intensity at time ``t``."""
        x = self.potentials_at(t)
        return float(sum(np.sum(intensity(x[:, i], self.spec.params[i]))
                         for i in range(self.spec.n)))

    def _set(self, m, i, value, t):
        """Overwrite one potential at time t, keeping the column sum coherent."""
        old = self.value(m, i, t)
        decay = math.exp(-self._p[i] * self._a[i] * (t - self._tcol[i]))
        self._colsum[i] = (self._colsum[i] * decay
                           - self._lead(old, i) + self._lead(value, i))
        self._tcol[i] = t
        self.potentials[m, i] = value
        self.last_update[m, i] = t

    # -- operations -----------------------------------------------------------

    def flow(self, dt: float) -> "ReplicaState":
        """Advance time by ``dt`` with no events (lazy exponential decay)."""
        if dt < 0:
            raise ValueError("dt must be nonnegative")
        self.now += dt
        return self

    def next_event(self, rng: np.random.Generator, *, debug: bool = False):
        """Sample the next spike by thinning and flow the state up to it.

        Returns ``(dt, (m, i))`` with ``dt`` measured from the current time,
        or :data:`EXTINCT` when the total rate is zero. The spike itself is
        not applied; call :meth:`apply_spike`.
        """
        start = self.now
        n = self.spec.n
        while True:
            bound = self.total_rate_cache
            if bound <= 0.0:
                return EXTINCT
            t_prop = self.now + rng.standard_exponential() / bound
            rates = [self.column_rate(i, t_prop) for i in range(n)]
            total = sum(rates)
            if debug:
                grid = np.linspace(self.now, t_prop, 9)
                seq = [self.total_rate(t) for t in grid]
                assert all(b <= a * (1 + 1e-12) + 1e-300 for a, b in zip(seq, seq[1:])), \
                    "intensity increased along the flow"
            if rng.random() * bound >= total:
                self.now = t_prop
                continue
            self.now = t_prop
            v = rng.random() * total
            isel = n - 1
            for i, c in enumerate(rates):
                if v < c:
                    isel = i
                    break
                v -= c
            xs = self.potentials_at()[:, isel]
            col = intensity(xs, self.spec.params[isel])
            msel = self.M - 1
            for m in range(self.M):
                if v < col[m]:
                    msel = m
                    break
                v -= col[m]
            return t_prop - start, (msel, isel)

    def apply_spike(self, spiker, rng: np.random.Generator):
        """Reset the spiker and deliver its weights to uniformly chosen other replicas.

        Returns a list of ``(target_neuron, target_replica, clipped)``.
        """
        m, i = spiker
        t = self.now
        self._set(m, i, self._r[i], t)
        routed = []
        for e in range(self._ptr[i], self._ptr[i + 1]):
            j, w = int(self._idx[e]), float(self._w[e])
            if self.M == 1:
                s = m
            else:
                k = int(rng.integers(0, self.M - 1))
                s = k if k < m else k + 1
            x = self.value(s, j, t)
            p = self._p[j]
            if self._rnorm and p != 1.0:
                y = x ** p + w
                new = 0.0 if y < 0 else y ** (1.0 / p)
            else:
                y = x + w
                new = 0.0 if y < 0 else y
            clipped = y < 0
            self.clip_count += int(clipped)
            self._set(s, j, new, t)
            routed.append((j, s, bool(clipped)))
        return routed


def flow(state: ReplicaState, dt: float) -> ReplicaState:
    return state.flow(dt)


def next_event(state: ReplicaState, rng, **kw):
    return state.next_event(rng, **kw)


def apply_spike(state: ReplicaState, spiker, rng):
    return state.apply_spike(spiker, rng)


def simulate_single_network(spec, horizon: float, seed: int, initial="resets",
                            max_events: int | None = None):
    """Original (non-replicated) dynamics with eager state updates.

    Independent of :class:`ReplicaState` and of the kernels; inputs stay in
    the spiking network. Returns ``(times, neurons)``.
    """
    spec = spec if isinstance(spec, ValidatedSpec) else validate_spec(spec)
    rng = np.random.default_rng(seed)
    params = spec.params
    a = np.array([p.drift_a for p in params])
    x = initial_potentials(spec, 1, initial)[0].copy()
    rnorm = spec.interaction is Interaction.RNORM

    def rates(v):
        return np.array([intensity(v[k], params[k]) for k in range(spec.n)])

    t = 0.0
    times, neurons = [], []
    while max_events is None or len(times) < max_events:
        bound = rates(x).sum()
        if bound <= 0:
            break
        dt = rng.standard_exponential() / bound
        if t + dt > horizon:
            break
        t += dt
        x = x * np.exp(-a * dt)
        lam = rates(x)
        total = lam.sum()
        if rng.random() * bound >= total:
            continue
        v = rng.random() * total
        i = int(np.searchsorted(np.cumsum(lam), v, side="right"))
        i = min(i, spec.n - 1)
        times.append(t)
        neurons.append(i)
        x[i] = params[i].reset_r
        for j, w in spec.spec.weights[i]:
            p = params[j].intensity_exponent_r
            if rnorm and p != 1.0:
                y = x[j] ** p + effective_weight(w, p)
                x[j] = 0.0 if y < 0 else y ** (1.0 / p)
            else:
                x[j] = max(x[j] + w, 0.0)
    return np.array(times), np.array(neurons, dtype=int)
