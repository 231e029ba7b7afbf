"""Exact generator of the M-replica process on exponential test functions.

The test function for a target set S of (replica, neuron) pairs is
``V(x) = exp(u * sum_{(m,i) in S} (x_i^m ** p_i + z_i))``. Because every jump
only rescales ``V`` by an explicit factor, ``G V / V`` has a closed form;
truncation at zero is included.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..errors import NoDriftFound
from ..network import Interaction, ValidatedSpec, validate_spec
from .state import out_edges


def _target_mask(target, M, n):
    mask = np.zeros((M, n), dtype=bool)
    if target is None or (isinstance(target, str) and target == "all"):
        mask[:] = True
        return mask
    if isinstance(target, tuple) and len(target) == 2 and all(
            isinstance(v, (int, np.integer)) for v in target):
        target = [target]
    for i, m in target:
        mask[m, i] = True
    return mask


def generator_ratio(potentials, u: float, target, spec, M: int | None = None) -> np.ndarray:
    """``(G V)(x) / V(x)`` for potentials of shape ``(..., M, n)``.

    Args:
        potentials: nonnegative states; leading axes are batch axes.
        u: exponent of the test function.
        target: ``(i, m)`` (0-based neuron, replica), an iterable of such
            pairs, or ``"all"``.
        spec: network spec.
        M: replica count; inferred from ``potentials`` when omitted.
    """
    vs = spec if isinstance(spec, ValidatedSpec) else validate_spec(spec)
    x = np.asarray(potentials, dtype=float)
    M = x.shape[-2] if M is None else M
    n = vs.n
    if x.shape[-2:] != (M, n):
        raise ValueError(f"potentials must have trailing shape ({M}, {n})")
    s = vs.spec
    a, r, z, p = s.drift, s.reset, s.offset, s.exponent
    mask = _target_mask(target, M, n)
    lead = np.power(x, p)
    rho = np.power(r, p)
    phi = lead + z

    # drift: d/dt x**p = -p a x**p
    q = u * np.sum(np.where(mask, -p * a * lead, 0.0), axis=(-2, -1))

    ptr, idx, w = out_edges(vs)
    linear = vs.interaction is Interaction.LINEAR_TRUNCATED
    for j in range(n):
        # reset factor for every replica copy of neuron j
        fac = np.where(mask[:, j], np.exp(u * (rho[j] - lead[..., :, j])), 1.0)
        for e in range(ptr[j], ptr[j + 1]):
            k = idx[e]
            yk = x[..., :, k] if linear else lead[..., :, k]
            jump = np.maximum(yk + w[e], 0.0) - yk
            d = np.where(mask[:, k], np.exp(u * jump), 1.0)  # (..., M) by receiving replica
            if M == 1:
                fac = fac * d
            else:
                fac = fac * (d.sum(axis=-1, keepdims=True) - d) / (M - 1)
        q = q + np.sum(phi[..., :, j] * (fac - 1.0), axis=-1)
    return q


def generator_apply(potentials, u: float, target, spec, M: int | None = None) -> np.ndarray:
    """Generator applied to the exponential test function, ``G V (x)``."""
    vs = spec if isinstance(spec, ValidatedSpec) else validate_spec(spec)
    x = np.asarray(potentials, dtype=float)
    M = x.shape[-2] if M is None else M
    mask = _target_mask(target, M, vs.n)
    s = vs.spec
    logv = u * np.sum(np.where(mask, np.power(x, s.exponent) + s.offset, 0.0), axis=(-2, -1))
    return generator_ratio(x, u, target, vs, M) * np.exp(logv)


def state_grid(M: int, n: int, x_max: float, points: int) -> np.ndarray:
    """Full tensor grid on ``[0, x_max]^(M n)``, shape ``(points**(M n), M, n)``."""
    dim = M * n
    if points ** dim > 2_000_000:
        raise ValueError("grid too large; reduce points or dimension")
    axis = np.linspace(0.0, x_max, points)
    pts = np.array(list(itertools.product(axis, repeat=dim)))
    return pts.reshape(-1, M, n)


@dataclass(frozen=True)
class LyapunovReport:
    c: float
    d: float
    c_max: float
    b: float
    n_in_region: int
    n_points: int


def lyapunov_scan(spec, M: int, u: float, grid, c: float | None = None) -> LyapunovReport:
    """Fit ``G V <= -c V + d`` on sampled states for ``V = exp(u sum(x**p + z))``.

    ``c_max`` is the best decay rate seen on the outer faces of the grid
    (states with some coordinate at the grid maximum); ``c`` defaults to half of
    it. ``d`` is the smallest constant making the inequality hold on every grid
    point and ``b`` bounds the region where ``d`` is needed.

    Raises:
        NoDriftFound: the generator is not eventually negative on the outer faces.
    """
    if not u > 0:
        raise ValueError("u must be positive")
    vs = spec if isinstance(spec, ValidatedSpec) else validate_spec(spec)
    x = np.asarray(grid, dtype=float)
    q = generator_ratio(x, u, "all", vs, M)
    flat = x.reshape(len(x), -1)
    top = flat.max()
    outer = flat.max(axis=1) >= top
    c_max = -float(q[outer].max())
    if not c_max > 0:
        raise NoDriftFound(f"generator ratio reaches {-c_max:.3g} >= 0 at the grid boundary")
    c = 0.5 * c_max if c is None else float(c)
    s = vs.spec
    logv = u * np.sum(np.power(x, s.exponent) + s.offset, axis=(-2, -1))
    region = q > -c
    if region.any():
        d = float(np.max((q[region] + c) * np.exp(logv[region])))
        b = float(flat[region].max())
    else:
        d, b = 0.0, 0.0
    return LyapunovReport(c=c, d=d, c_max=c_max, b=b,
                          n_in_region=int(region.sum()), n_points=len(x))
