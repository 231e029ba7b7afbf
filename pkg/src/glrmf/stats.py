"""Rate and moment estimation from event logs, and solver/simulation reports."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .errors import InsufficientData, SpecMismatch
from .pdmp.generator import generator_apply
from .pdmp.simulate import EventLog
from .rmf import RateSolution

MIN_BATCHES = 10


def _batch_ci(batches: np.ndarray, level: float):
    """Mean, CI half-width and standard error of batch means along axis 0."""
    nb = batches.shape[0]
    mean = batches.mean(axis=0)
    sd = batches.std(axis=0, ddof=1)
    stderr = sd / np.sqrt(nb)
    tcrit = sps.t.ppf(0.5 + level / 2, nb - 1)
    return mean, tcrit * stderr, stderr


@dataclass(frozen=True)
class RateEstimate:
    """Per-neuron spike rate averaged over replicas.

    ``ci_halfwidth`` is the 95% batch-means half-width and ``stderr`` the
    matching standard error. ``batch_rates`` keeps the per-batch series so
    estimates from several seeds can be pooled.
    """
    mean_rate: np.ndarray
    ci_halfwidth: np.ndarray
    stderr: np.ndarray
    n_batches: int
    batch_len: float
    batch_rates: np.ndarray


def estimate_rates(log: EventLog, burn_in: float | None = None,
                   batch_len: float | None = None) -> RateEstimate:
    """Batch-means rate estimate over ``[burn_in, horizon]``.

    Args:
        log: simulation output.
        burn_in: discarded transient; defaults to the log's burn-in.
        batch_len: batch length; defaults to a twentieth of the window.

    Raises:
        InsufficientData: fewer than 10 batches fit in the window.
    """
    burn = log.burn_in if burn_in is None else float(burn_in)
    window = log.horizon - burn
    if batch_len is None:
        batch_len = window / 20
    nb = int(np.floor(window / batch_len * (1 + 1e-12))) if window > 0 and batch_len > 0 else 0
    if nb < MIN_BATCHES:
        raise InsufficientData(f"only {nb} batches of length {batch_len:g} after burn-in")
    sel = log.times >= burn
    t, neu = log.times[sel], log.neurons[sel]
    b = np.minimum(((t - burn) // batch_len).astype(np.int64), nb - 1)
    counts = np.zeros((nb, log.n))
    np.add.at(counts, (b, neu), 1.0)
    # the tail beyond the last full batch only enters the overall mean
    used = nb * batch_len
    full = (t - burn) < used
    counts_full = np.zeros((nb, log.n))
    np.add.at(counts_full, (b[full], neu[full]), 1.0)
    batch_rates = counts_full / (log.M * batch_len)
    _, ci, se = _batch_ci(batch_rates, 0.95)
    mean = np.bincount(neu, minlength=log.n) / (log.M * window)
    return RateEstimate(mean, ci, se, nb, float(batch_len), batch_rates)


def pool_rates(estimates) -> RateEstimate:
    """Pool estimates from independent runs by concatenating batch series."""
    estimates = list(estimates)
    if not estimates:
        raise InsufficientData("nothing to pool")
    lens = {e.batch_len for e in estimates}
    if len(lens) != 1:
        raise SpecMismatch("estimates use different batch lengths")
    series = np.concatenate([e.batch_rates for e in estimates])
    mean, ci, se = _batch_ci(series, 0.95)
    # means are equally weighted across runs
    mean = np.mean([e.mean_rate for e in estimates], axis=0)
    return RateEstimate(mean, ci, se, series.shape[0], lens.pop(), series)


@dataclass(frozen=True)
class MomentEstimate:
    k: int
    value: np.ndarray
    ci_halfwidth: np.ndarray
    n_windows: int


def estimate_count_moments(log: EventLog, k: int, burn_in: float | None = None,
                           n_batches: int = 20) -> MomentEstimate:
    """k-th moment of spike counts in disjoint unit windows, per neuron.

    Raises:
        InsufficientData: fewer than ``n_batches`` unit windows are available.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    burn = log.burn_in if burn_in is None else float(burn_in)
    nw = int(np.floor(log.horizon - burn))
    if nw < max(n_batches, MIN_BATCHES):
        raise InsufficientData(f"only {nw} unit windows after burn-in")
    sel = (log.times >= burn) & (log.times < burn + nw)
    win = ((log.times[sel] - burn) // 1.0).astype(np.int64)
    counts = np.zeros((nw, log.M, log.n))
    np.add.at(counts, (win, log.replicas[sel], log.neurons[sel]), 1.0)
    per_window = np.mean(counts ** k, axis=1)  # (nw, n), averaged over replicas
    size = nw // n_batches
    batches = per_window[: size * n_batches].reshape(n_batches, size, log.n).mean(axis=1)
    _, ci, _ = _batch_ci(batches, 0.95)
    return MomentEstimate(k, per_window.mean(axis=0), ci, nw)


@dataclass(frozen=True)
class StationarityResidual:
    """Time-average of ``G V`` per neuron with a 99% batch-means CI."""
    u: float
    mean: np.ndarray
    ci_halfwidth: np.ndarray
    n_snapshots: int

    @property
    def contains_zero(self) -> np.ndarray:
        return np.abs(self.mean) <= self.ci_halfwidth


def stationarity_residual(log: EventLog, u: float, spec, *, burn_in: float | None = None,
                          snapshots=None, n_batches: int = 20) -> StationarityResidual:
    """Average the generator on ``V = exp(u (x_i^m ** p + z))`` over sampled states.

    For each neuron ``i`` the value is averaged over the replicas ``m``.

    Args:
        log: run with ``snapshot_dt > 0``.
        u: test-function exponent.
        spec: the simulated network.
        burn_in: snapshots before this time are dropped.
        snapshots: optional ``(times, states)`` overriding the log's snapshots.

    Raises:
        InsufficientData: fewer than ``n_batches`` snapshots after burn-in.
    """
    times, states = (log.snapshot_times, log.snapshots) if snapshots is None else snapshots
    states = np.asarray(states, dtype=float)
    burn = log.burn_in if burn_in is None else float(burn_in)
    keep = np.asarray(times) >= burn
    states = states[keep]
    ns = len(states)
    if ns < max(n_batches, MIN_BATCHES):
        raise InsufficientData(f"only {ns} snapshots after burn-in")
    n, M = log.n, log.M
    if u == 0.0:
        zero = np.zeros(n)
        return StationarityResidual(u, zero, zero, ns)
    vals = np.empty((ns, n))
    for i in range(n):
        vals[:, i] = np.mean(
            [generator_apply(states, u, (i, m), spec, M) for m in range(M)], axis=0)
    size = ns // n_batches
    batches = vals[: size * n_batches].reshape(n_batches, size, n).mean(axis=1)
    _, ci, _ = _batch_ci(batches, 0.99)
    return StationarityResidual(u, vals.mean(axis=0), ci, ns)


@dataclass(frozen=True)
class ComparisonRow:
    neuron: int
    beta_analytic: float
    rate_sim: float
    ci: float
    abs_err: float
    rel_err: float
    z: float
    qualitative_mismatch: bool


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple

    @property
    def worst_abs_z(self) -> float:
        return max((abs(r.z) for r in self.rows), default=0.0)

    @property
    def worst_rel_err(self) -> float:
        return max((r.rel_err for r in self.rows), default=0.0)

    @property
    def any_mismatch(self) -> bool:
        return any(r.qualitative_mismatch for r in self.rows)

    def passes(self, z_max: float = 3.0) -> bool:
        return not self.any_mismatch and self.worst_abs_z <= z_max

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["neuron", "beta_analytic", "rate_sim", "ci", "abs_err", "rel_err", "z"])
        for r in self.rows:
            wr.writerow([r.neuron, repr(r.beta_analytic), repr(r.rate_sim), repr(r.ci),
                         repr(r.abs_err), repr(r.rel_err), repr(r.z)])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "rows": [r.__dict__ for r in self.rows],
            "worst_abs_z": self.worst_abs_z,
            "worst_rel_err": self.worst_rel_err,
            "qualitative_mismatch": self.any_mismatch,
        }, indent=2)


def compare_rates(solution: RateSolution, estimate: RateEstimate) -> ComparisonReport:
    """Per-neuron errors and z-scores ``(rate - beta) / stderr`` (1-based neuron ids).

    A row is a qualitative mismatch when the solver reports a degenerate
    (zero) rate but the simulated rate is significantly positive, or the
    solver rate is positive while the simulation recorded no spikes.

    Raises:
        SpecMismatch: the two inputs describe different numbers of neurons.
    """
    beta = np.asarray(solution.beta, dtype=float)
    if beta.shape != np.shape(estimate.mean_rate):
        raise SpecMismatch(
            f"solution has {beta.size} neurons, estimate has {np.size(estimate.mean_rate)}")
    rows = []
    for i, (b, r, ci, se, deg) in enumerate(zip(beta, estimate.mean_rate, estimate.ci_halfwidth,
                                                estimate.stderr, solution.degenerate)):
        err = abs(r - b)
        rel = err / b if b > 0 else (0.0 if err == 0 else np.inf)
        if se > 0:
            z = (r - b) / se
        else:
            z = 0.0 if err == 0 else np.copysign(np.inf, r - b)
        mismatch = bool((deg or b == 0) and r > ci) or bool(b > 0 and r == 0)
        rows.append(ComparisonRow(i + 1, float(b), float(r), float(ci), float(err),
                                  float(rel), float(z), mismatch))
    return ComparisonReport(tuple(rows))


def nonincreasing_up_to_ci(abs_err, ci) -> np.ndarray:
    """Check an error sequence (axis 0 ordered by M) is non-increasing up to CI.

    Step ``k -> k+1`` passes when ``err[k+1] <= err[k] + sqrt(ci[k]**2 + ci[k+1]**2)``,
    i.e. any increase is within the combined 95% half-widths.

    Returns:
        Boolean array with one entry per trailing index (e.g. per neuron).
    """
    err = np.asarray(abs_err, dtype=float)
    ci = np.asarray(ci, dtype=float)
    slack = np.sqrt(ci[1:] ** 2 + ci[:-1] ** 2)
    return np.all(err[1:] <= err[:-1] + slack, axis=0)
