"""Network specifications for Galves-Löcherbach feedforward prefixes.

Neuron indices are 0-based in the Python API and 1-based in JSON documents.
Weights are stored once, per presynaptic neuron: ``weights[i]`` is a tuple of
``(j, w_ij)`` pairs, ``w_ij`` being the potential jump delivered to ``j`` when
``i`` spikes. Fan-in lists are derived on validation.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (HypothesisMismatch, InvalidTargets, NegativeParameter,
                     NonFeedforward, SolverDivergence, SpecError)


class Hypothesis(str, enum.Enum):
    H1 = "H1"
    H2 = "H2"
    H3 = "H3"
    H4 = "H4"


class Interaction(str, enum.Enum):
    LINEAR_TRUNCATED = "linear"
    RNORM = "rnorm"


_PAIRING = {
    Interaction.LINEAR_TRUNCATED: {Hypothesis.H1, Hypothesis.H2},
    Interaction.RNORM: {Hypothesis.H3, Hypothesis.H4},
}


@dataclass(frozen=True)
class NeuronParams:
    """Per-neuron constants; intensity is ``x**intensity_exponent_r + intensity_offset_z``."""

    drift_a: float
    reset_r: float
    intensity_offset_z: float = 0.0
    intensity_exponent_r: float = 1.0


@dataclass(frozen=True)
class NetworkSpec:
    n: int
    params: tuple[NeuronParams, ...]
    weights: tuple[tuple[tuple[int, float], ...], ...]
    interaction: Interaction = Interaction.LINEAR_TRUNCATED
    hypothesis: Hypothesis = Hypothesis.H1

    @classmethod
    def from_edges(cls, params: Sequence[NeuronParams], edges, *,
                   hypothesis="H1", interaction="linear") -> "NetworkSpec":
        """Build from ``(pre, post, w)`` triples; zero weights are dropped."""
        n = len(params)
        out: list[dict[int, float]] = [dict() for _ in range(n)]
        for pre, post, w in edges:
            pre, post, w = int(pre), int(post), float(w)
            if not (0 <= pre < n and 0 <= post < n):
                raise SpecError(f"edge {pre}->{post} references a neuron outside 0..{n - 1}")
            if post in out[pre]:
                raise SpecError(f"duplicate edge {pre}->{post}")
            if w != 0.0:
                out[pre][post] = w
        weights = tuple(tuple(sorted(d.items())) for d in out)
        return cls(n, tuple(params), weights, Interaction(interaction), Hypothesis(hypothesis))

    def edges(self):
        """Iterate ``(pre, post, w)`` in presynaptic order."""
        for i, row in enumerate(self.weights):
            for j, w in row:
                yield i, j, w

    @property
    def drift(self) -> np.ndarray:
        return np.array([p.drift_a for p in self.params])

    @property
    def reset(self) -> np.ndarray:
        return np.array([p.reset_r for p in self.params])

    @property
    def offset(self) -> np.ndarray:
        return np.array([p.intensity_offset_z for p in self.params])

    @property
    def exponent(self) -> np.ndarray:
        return np.array([p.intensity_exponent_r for p in self.params])

    def weight_matrix(self) -> np.ndarray:
        """Dense ``W[i, j] = w_ij`` (pre, post)."""
        mat = np.zeros((self.n, self.n))
        for i, j, w in self.edges():
            mat[i, j] = w
        return mat


@dataclass(frozen=True)
class ValidatedSpec:
    """A spec that passed validation, with derived connectivity."""

    spec: NetworkSpec
    fan_in: tuple[tuple[tuple[int, float], ...], ...]
    fan_out: tuple[tuple[int, ...], ...]
    strict_feedforward: bool
    back_edges: tuple[tuple[int, int], ...] = field(default=())

    # convenience passthroughs
    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def params(self):
        return self.spec.params

    @property
    def interaction(self) -> Interaction:
        return self.spec.interaction

    @property
    def hypothesis(self) -> Hypothesis:
        return self.spec.hypothesis


def _check_hypothesis(spec: NetworkSpec) -> None:
    hyp = spec.hypothesis
    if hyp not in _PAIRING[spec.interaction]:
        raise HypothesisMismatch(
            f"interaction {spec.interaction.value!r} cannot be combined with {hyp.value}")
    for i, p in enumerate(spec.params):
        label = f"neuron {i + 1}"
        if hyp in (Hypothesis.H1, Hypothesis.H2) and p.intensity_exponent_r != 1.0:
            raise HypothesisMismatch(f"{label}: {hyp.value} requires exponent 1")
        if hyp in (Hypothesis.H1, Hypothesis.H3):
            if p.intensity_offset_z != 0.0:
                raise HypothesisMismatch(f"{label}: {hyp.value} requires offset z = 0")
            if p.reset_r <= 0.0:
                raise HypothesisMismatch(f"{label}: {hyp.value} requires reset r_i > 0")
        if hyp is Hypothesis.H2 and p.intensity_offset_z <= 0.0:
            raise HypothesisMismatch(f"{label}: H2 requires offset z > 0")


def validate_spec(spec: NetworkSpec | ValidatedSpec) -> ValidatedSpec:
    """Check parameters, hypothesis and feedforward structure.

    Edges ``j -> i`` with ``j < i`` are feedforward; ``j = i + 1`` is the
    allowed back-edge (accepted for simulation, but the spec is then not
    strict feedforward and the analytic solver refuses it).

    Raises:
        NegativeParameter, HypothesisMismatch, NonFeedforward
    """
    if isinstance(spec, ValidatedSpec):
        spec = spec.spec
    if spec.n != len(spec.params) or spec.n != len(spec.weights):
        raise SpecError("n does not match the number of neurons")
    for i, p in enumerate(spec.params):
        for name in ("drift_a", "reset_r", "intensity_offset_z"):
            if not getattr(p, name) >= 0.0:
                raise NegativeParameter(f"neuron {i + 1}: {name} must be >= 0")
        if not p.intensity_exponent_r > 0.0:
            raise NegativeParameter(f"neuron {i + 1}: intensity exponent must be > 0")
    _check_hypothesis(spec)

    fan_in: list[list[tuple[int, float]]] = [[] for _ in range(spec.n)]
    back = []
    for pre, post, w in spec.edges():
        if pre == post:
            raise NonFeedforward(f"self-loop on neuron {pre + 1}")
        if pre > post + 1:
            raise NonFeedforward(
                f"edge {pre + 1}->{post + 1}: inputs may only come from earlier "
                "neurons or the immediate successor")
        if pre == post + 1:
            back.append((pre, post))
        fan_in[post].append((pre, w))
    fan_out = tuple(tuple(j for j, _ in row) for row in spec.weights)
    return ValidatedSpec(
        spec=spec,
        fan_in=tuple(tuple(sorted(f)) for f in fan_in),
        fan_out=fan_out,
        strict_feedforward=not back,
        back_edges=tuple(back),
    )


@dataclass(frozen=True)
class PusProfile:
    incoming_abs_sums: np.ndarray
    sup_value: float


def pus_profile(spec: NetworkSpec | ValidatedSpec) -> PusProfile:
    """Per-neuron incoming absolute weight sums and their maximum."""
    if isinstance(spec, ValidatedSpec):
        spec = spec.spec
    sums = np.zeros(spec.n)
    for _, j, w in spec.edges():
        sums[j] += abs(w)
    return PusProfile(sums, float(sums.max()) if spec.n else 0.0)


# --- JSON --------------------------------------------------------------------

def spec_to_dict(spec: NetworkSpec | ValidatedSpec) -> dict:
    if isinstance(spec, ValidatedSpec):
        spec = spec.spec
    return {
        "n": spec.n,
        "hypothesis": spec.hypothesis.value,
        "interaction": spec.interaction.value,
        "neurons": [
            {"a": p.drift_a, "r": p.reset_r, "z": p.intensity_offset_z,
             "exponent": p.intensity_exponent_r}
            for p in spec.params
        ],
        "edges": [{"from": i + 1, "to": j + 1, "w": w} for i, j, w in spec.edges()],
    }


def spec_from_dict(doc: dict) -> NetworkSpec:
    try:
        neurons = [
            NeuronParams(float(nd["a"]), float(nd["r"]), float(nd.get("z", 0.0)),
                         float(nd.get("exponent", 1.0)))
            for nd in doc["neurons"]
        ]
        edges = [(int(e["from"]) - 1, int(e["to"]) - 1, float(e["w"]))
                 for e in doc.get("edges", [])]
        n = int(doc.get("n", len(neurons)))
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed network document: {exc}") from exc
    if n != len(neurons):
        raise SpecError(f"n = {n} but {len(neurons)} neurons listed")
    return NetworkSpec.from_edges(
        neurons, edges,
        hypothesis=doc.get("hypothesis", "H1"),
        interaction=doc.get("interaction", "linear"),
    )


def load_spec(path) -> NetworkSpec:
    return spec_from_dict(json.loads(Path(path).read_text()))


def dump_spec(spec, path=None) -> str:
    text = json.dumps(spec_to_dict(spec), indent=2)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


# --- beyond-PUS families -----------------------------------------------------

@dataclass(frozen=True)
class NeuronTuning:
    neuron: int
    target: float
    reset: float
    beta: float
    feasible: bool
    floor_rate: float | None
    condition: float


@dataclass(frozen=True)
class BeyondPusReport:
    rows: tuple[NeuronTuning, ...]
    pus: PusProfile

    @property
    def infeasible(self) -> list[int]:
        return [row.neuron for row in self.rows if not row.feasible]


def halving_targets(n: int) -> np.ndarray:
    return 0.5 ** np.arange(1, n + 1)


def generate_beyond_pus(n: int, a0: float, targets=None, drift: float = 0.0,
                        quad=None, *, r_floor: float = 1e-6):
    """Dense lower-triangular H1 network with reset values tuned neuron by neuron.

    Every ``j < i`` sends weight ``a0`` to ``i``, so the incoming absolute sum
    of neuron ``i`` grows like ``i * a0`` and uniform summability fails as
    ``n`` grows. Rates of earlier neurons do not depend on ``r_i``, so each
    ``r_i`` is chosen by bisection (the rate is increasing in the reset) as
    the largest value in ``[r_floor, target_i]`` keeping ``beta_i <= target_i``.
    When even ``r_floor`` overshoots, the neuron is reported infeasible with
    its floor rate and ``r_i = r_floor`` is kept.

    The drift applies to neurons 2..n; the first neuron has no input and
    keeps zero drift, otherwise its rate would vanish.

    Returns:
        ``(ValidatedSpec, BeyondPusReport)``

    Raises:
        InvalidTargets: targets not positive and strictly decreasing.
        SolverDivergence: the rate condition fails at some neuron.
    """
    from .rmf import QuadratureConfig, solve_rate  # circular at import time

    if n < 1 or not a0 > 0:
        raise SpecError("need n >= 1 and a0 > 0")
    if drift < 0:
        raise NegativeParameter("drift must be >= 0")
    targets = halving_targets(n) if targets is None else np.asarray(targets, dtype=float)
    if targets.shape != (n,) or np.any(targets <= 0) or np.any(np.diff(targets) >= 0):
        raise InvalidTargets("targets must be n positive, strictly decreasing values")
    quad = quad or QuadratureConfig()

    resets = list(targets)
    edges = [(j, i, a0) for i in range(n) for j in range(i)]
    betas: list[float] = []
    rows = []

    def spec_with(i, r_i):
        resets[i] = r_i
        params = [NeuronParams(0.0 if k == 0 else drift, resets[k]) for k in range(n)]
        return validate_spec(NetworkSpec.from_edges(params, edges))

    for i in range(n):
        target = float(targets[i])

        def rate(r_i):
            res = solve_rate(i, betas, spec_with(i, r_i), quad)
            if res.degenerate:
                raise SolverDivergence(
                    f"rate condition fails at neuron {i + 1} (value {res.condition:.6g})")
            return res

        top = rate(target)
        floor_rate = None
        if top.beta <= target:
            r_i, res, feasible = target, top, True
        else:
            bottom = rate(r_floor)
            if bottom.beta > target:
                r_i, res, feasible = r_floor, bottom, False
                floor_rate = bottom.beta
            else:
                lo, hi, res = r_floor, target, bottom
                while hi - lo > 1e-12 * hi:
                    mid = 0.5 * (lo + hi)
                    trial = rate(mid)
                    if trial.beta <= target:
                        lo, res = mid, trial
                    else:
                        hi = mid
                r_i, feasible = lo, True
        spec_with(i, r_i)
        betas.append(res.beta)
        rows.append(NeuronTuning(i, target, r_i, res.beta, feasible, floor_rate, res.condition))

    final = spec_with(n - 1, resets[n - 1])
    return final, BeyondPusReport(tuple(rows), pus_profile(final))
