"""Weighted-inequality verification on discretized test functions.

The test functions are tensor products of the classic smooth bump
``b(z) = exp(-1/(1-z^2))`` on ``|z| < 1``, so value, gradient, Laplacian and
time derivative all have closed forms and the integrands vanish identically
outside a known box.  Both sides of the weighted inequality

    integral w * (u^2 + |grad u|^2)  <=  integral w * (u_t + lap u)^2

are computed by tensor-product quadrature over that box, with the weight
``w = exp(L)`` handled in the log domain: the integrand is assembled as
``exp(L - L_max) * payload`` where ``L_max`` is the grid maximum of the
exponent over the support of ``u`` (the nodes where the payload is
nonzero).  The common factor ``exp(L_max)`` cancels in the ratio, and no
exponential evaluated ever exceeds 1.

The amplified weight concentrates sharply near the lower time edge of the
support; ``CarlemanReport.resolved_fraction`` reports what fraction of the
support nodes still carries nonzero normalized weight, and
``strict_resolution=True`` turns a fraction below 1% into a
DegenerateWeightError instead of a report.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .weights import WeightParams

__all__ = [
    "BumpFunction",
    "BumpSum",
    "GridSpec",
    "CarlemanReport",
    "SupportViolationError",
    "DegenerateWeightError",
    "bump_eval",
    "heat_residual",
    "carleman_integrals",
    "verify_carleman",
]


class SupportViolationError(ValueError):
    """The integration box is not strictly inside the truncated cone Q."""


class DegenerateWeightError(RuntimeError):
    """Under 1% of support nodes carry nonzero normalized weight."""


def _bump_factors(z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(b, b', b'') of ``b(z) = exp(-1/(1-z^2))`` elementwise; zero outside |z|<1."""
    z = np.asarray(z, dtype=float)
    inside = np.abs(z) < 1.0
    w = np.where(inside, 1.0 - z * z, 1.0)
    with np.errstate(under="ignore"):
        b = np.where(inside, np.exp(-1.0 / w), 0.0)
    w2 = w * w
    bp = b * (-2.0 * z / w2)
    bpp = b * (4.0 * z * z / (w2 * w2) - 2.0 / w2 - 8.0 * z * z / (w2 * w))
    return b, bp, bpp


@dataclass(frozen=True)
class BumpFunction:
    """Smooth compactly supported tensor bump; time is the last axis.

    ``center`` and ``radii`` have length dim+1 (spatial components first,
    then time).  The support is the open box ``prod (c_i - s_i, c_i + s_i)``;
    whether that box sits inside the truncated cone depends on the cone
    parameter and is checked where the bump is integrated.
    """

    amplitude: float
    center: tuple[float, ...]
    radii: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radii", tuple(float(s) for s in self.radii))
        if len(self.center) != len(self.radii):
            raise ValueError("center and radii must have equal length")
        if len(self.center) < 3:
            raise ValueError("need at least two spatial axes plus time")
        if any(s <= 0.0 for s in self.radii):
            raise ValueError("radii must be positive")
        if not math.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")

    @property
    def dim(self) -> int:
        return len(self.center) - 1

    @property
    def support(self) -> tuple[tuple[float, float], ...]:
        return tuple((c - s, c + s) for c, s in zip(self.center, self.radii))

    def evaluate(self, x, t: float) -> tuple[float, np.ndarray, float, float]:
        """(value, spatial gradient, Laplacian, time derivative) at one point."""
        x = np.asarray(x, dtype=float)
        if x.size != self.dim:
            raise ValueError(f"expected {self.dim} spatial coordinates, got {x.size}")
        coords = np.append(x, t)
        z = (coords - np.array(self.center)) / np.array(self.radii)
        if np.any(np.abs(z) >= 1.0):
            return 0.0, np.zeros(self.dim), 0.0, 0.0
        b, bp, bpp = _bump_factors(z)
        s = np.array(self.radii)
        value = self.amplitude * float(np.prod(b))
        grad = np.empty(self.dim)
        lap = 0.0
        for j in range(self.dim):
            others = self.amplitude * float(np.prod(b[:j]) * np.prod(b[j + 1 :]))
            grad[j] = others * float(bp[j]) / s[j]
            lap += others * float(bpp[j]) / (s[j] * s[j])
        dt = self.amplitude * float(np.prod(b[:-1])) * float(bp[-1]) / s[-1]
        return value, grad, lap, dt


@dataclass(frozen=True)
class BumpSum:
    """Sum of up to four bumps sharing one dimension; support is the hull box."""

    bumps: tuple[BumpFunction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bumps", tuple(self.bumps))
        if not 1 <= len(self.bumps) <= 4:
            raise ValueError("BumpSum takes between 1 and 4 bumps")
        dims = {b.dim for b in self.bumps}
        if len(dims) != 1:
            raise ValueError("all bumps must share the same dimension")

    @property
    def dim(self) -> int:
        return self.bumps[0].dim

    @property
    def support(self) -> tuple[tuple[float, float], ...]:
        boxes = [b.support for b in self.bumps]
        return tuple(
            (min(box[i][0] for box in boxes), max(box[i][1] for box in boxes))
            for i in range(self.dim + 1)
        )

    def evaluate(self, x, t: float) -> tuple[float, np.ndarray, float, float]:
        value, lap, dt = 0.0, 0.0, 0.0
        grad = np.zeros(self.dim)
        for b in self.bumps:
            v, g, l, d = b.evaluate(x, t)
            value += v
            grad += g
            lap += l
            dt += d
        return value, grad, lap, dt


def bump_eval(u, x, t: float) -> tuple[float, np.ndarray, float, float]:
    """Closed-form (value, gradient, laplacian, dt); zeros outside the support."""
    return u.evaluate(x, t)


def heat_residual(u, x, t: float) -> float:
    """Heat-operator residual ``u_t + lap u`` of a test function at a point."""
    _, _, lap, dt = u.evaluate(x, t)
    return dt + lap


@dataclass(frozen=True)
class GridSpec:
    """Tensor-product quadrature grid over an axis-aligned box.

    ``counts`` are per-axis node counts (spatial axes first, time last),
    at least 8 each; the Simpson rule additionally needs odd counts.
    """

    counts: tuple[int, ...]
    box: tuple[tuple[float, float], ...]
    rule: str = "simpson"

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", tuple(int(n) for n in self.counts))
        object.__setattr__(self, "box", tuple((float(lo), float(hi)) for lo, hi in self.box))
        if self.rule not in ("simpson", "midpoint"):
            raise ValueError(f"unknown rule {self.rule!r}")
        if len(self.counts) != len(self.box):
            raise ValueError("counts and box must have equal length")
        if any(n < 8 for n in self.counts):
            raise ValueError("all axis counts must be >= 8")
        if self.rule == "simpson" and any(n % 2 == 0 for n in self.counts):
            raise ValueError("the simpson rule needs odd point counts")
        if any(lo >= hi for lo, hi in self.box):
            raise ValueError("box sides must have positive length")

    @classmethod
    def from_support(cls, u, n: int, rule: str = "simpson") -> "GridSpec":
        """Cubic grid (n nodes per axis) over the support box of ``u``."""
        box = u.support
        return cls(counts=(n,) * len(box), box=box, rule=rule)

    def axis_nodes_weights(self, axis: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.box[axis]
        n = self.counts[axis]
        if self.rule == "midpoint":
            step = (hi - lo) / n
            nodes = lo + (np.arange(n) + 0.5) * step
            weights = np.full(n, step)
            return nodes, weights
        nodes = np.linspace(lo, hi, n)
        step = (hi - lo) / (n - 1)
        weights = np.full(n, 2.0)
        weights[1::2] = 4.0
        weights[0] = weights[-1] = 1.0
        return nodes, weights * (step / 3.0)


@dataclass(frozen=True)
class CarlemanReport:
    """Result of one weighted-inequality quadrature.

    ``lhs`` and ``rhs`` are reported relative to ``exp(log_normalizer)``;
    that factor cancels in ``ratio = lhs / rhs`` and in the pass verdict
    ``lhs <= rhs``.  ``resolved_fraction`` is the share of support nodes
    whose normalized weight did not underflow; values near zero mean the
    concentrated weight reduces the comparison to a few nodes.
    """

    a: float
    K: float
    lhs: float
    rhs: float
    ratio: float
    log_normalizer: float
    grid: GridSpec
    passed: bool
    resolved_fraction: float


def _check_box_in_Q(box, epsilon: float) -> None:
    spatial = box[:-1]
    t_lo, t_hi = box[-1]
    if not (0.0 < t_lo and t_hi < 1.0):
        raise SupportViolationError(f"time range ({t_lo}, {t_hi}) exits (0, 1)")
    for corner in itertools.product(*spatial):
        x1 = corner[0]
        norm = math.sqrt(sum(c * c for c in corner))
        if not x1 > 1.0:
            raise SupportViolationError(f"corner {corner} violates x1 > 1")
        if not x1 > epsilon * norm:
            raise SupportViolationError(f"corner {corner} exits the cone (epsilon={epsilon})")


def _fields_on_grid(u, axes: Sequence[np.ndarray], dim: int):
    """Tensor-product bump fields, one full array per requested field."""
    shape = tuple(len(ax) for ax in axes)
    bumps = u.bumps if isinstance(u, BumpSum) else (u,)
    value = np.zeros(shape)
    grads = [np.zeros(shape) for _ in range(dim)]
    lap = np.zeros(shape)
    dt = np.zeros(shape)
    n_axes = dim + 1
    for bump in bumps:
        b, bp, bpp = [], [], []
        for i in range(n_axes):
            z = (axes[i] - bump.center[i]) / bump.radii[i]
            bi, bpi, bppi = _bump_factors(z)
            reshape = [1] * n_axes
            reshape[i] = len(axes[i])
            b.append(bi.reshape(reshape))
            bp.append((bpi / bump.radii[i]).reshape(reshape))
            bpp.append((bppi / bump.radii[i] ** 2).reshape(reshape))
        full = bump.amplitude * math.prod(b[1:], start=b[0])
        value += full
        for j in range(dim):
            partial = bump.amplitude * bp[j]
            second = bump.amplitude * bpp[j]
            for i in range(n_axes):
                if i != j:
                    partial = partial * b[i]
                    second = second * b[i]
            grads[j] += partial
            lap += second
        dpart = bump.amplitude * bp[dim]
        for i in range(dim):
            dpart = dpart * b[i]
        dt += dpart
    return value, grads, lap, dt


def carleman_integrals(
    u,
    params: WeightParams,
    a: float,
    K: float,
    grid: GridSpec,
    *,
    strict_resolution: bool = False,
    unit_weight: bool = False,
) -> CarlemanReport:
    """Quadrature of both sides of the weighted inequality over the support box.

    The left side integrates ``u^2 + |grad u|^2`` and the right side
    ``(u_t + lap u)^2``, both against ``exp(L - L_max)`` with ``L`` the
    log-domain weight exponent and ``L_max`` its maximum over the nodes
    where the payloads are nonzero.  ``unit_weight=True`` replaces ``L``
    by 0 (plain unweighted quadrature, used by exactness tests).
    """
    if not a >= 0.0:
        raise ValueError(f"a must be nonnegative, got {a}")
    if not K > 0.0:
        raise ValueError(f"K must be positive, got {K}")
    dim = len(grid.box) - 1
    _check_box_in_Q(grid.box, params.epsilon)

    axes, weights = zip(*(grid.axis_nodes_weights(i) for i in range(dim + 1)))
    value, grads, lap, dt = _fields_on_grid(u, axes, dim)

    payload_l = value * value
    for g in grads:
        payload_l = payload_l + g * g
    resid = dt + lap
    payload_r = resid * resid

    support = (payload_l > 0.0) | (payload_r > 0.0)
    n_support = int(np.count_nonzero(support))
    if n_support == 0:
        return CarlemanReport(
            a=a, K=K, lhs=0.0, rhs=0.0, ratio=0.0, log_normalizer=0.0,
            grid=grid, passed=True, resolved_fraction=0.0,
        )

    if unit_weight:
        log_w = np.zeros(value.shape)
    else:
        n_axes = dim + 1
        r2 = 0.0
        for i in range(dim):
            reshape = [1] * n_axes
            reshape[i] = len(axes[i])
            xi = axes[i].reshape(reshape)
            r2 = r2 + xi * xi
        r = np.sqrt(r2)
        x1 = axes[0].reshape([len(axes[0])] + [1] * dim)
        h = x1 / r
        phi = np.power(r, params.alpha) * (
            np.power(h, params.m) - math.pow(params.epsilon, params.m)
        )
        t = axes[dim].reshape([1] * dim + [len(axes[dim])])
        lam = np.power(t, -K) - 1.0
        log_w = 2.0 * a * lam * phi - (r2 + K) / (8.0 * t)
        log_w = np.broadcast_to(log_w, value.shape)

    ref = float(np.max(log_w[support]))
    # Nodes outside the payload support contribute nothing but may carry a
    # larger exponent (the weight peaks on the box edge, where u vanishes);
    # send them to exp(-inf) = 0 instead of overflowing.
    with np.errstate(under="ignore"):
        env = np.exp(np.where(support, log_w - ref, -np.inf))

    resolved = int(np.count_nonzero(support & (env > 0.0)))
    resolved_fraction = resolved / n_support
    if strict_resolution and resolved_fraction < 0.01:
        raise DegenerateWeightError(
            f"only {resolved} of {n_support} support nodes carry weight "
            f"(fraction {resolved_fraction:.2e} < 1%); grid too coarse for "
            f"the weight's concentration"
        )

    w_full = math.prod(
        (w.reshape([1] * i + [len(w)] + [1] * (dim - i)) for i, w in enumerate(weights)),
        start=np.ones([1] * (dim + 1)),
    )
    lhs = float(np.sum(w_full * env * payload_l))
    rhs = float(np.sum(w_full * env * payload_r))
    ratio = lhs / rhs if rhs > 0.0 else 0.0
    return CarlemanReport(
        a=a, K=K, lhs=lhs, rhs=rhs, ratio=ratio, log_normalizer=ref,
        grid=grid, passed=bool(lhs <= rhs), resolved_fraction=resolved_fraction,
    )


def verify_carleman(
    u,
    params: WeightParams,
    a_list: Sequence[float],
    K_init: float,
    K_cap: float,
    grid: GridSpec,
    *,
    strict_resolution: bool = False,
) -> list[CarlemanReport]:
    """Run the inequality for each amplification ``a``, escalating K on failure.

    K doubles (capped at ``K_cap``) until the inequality passes; the report
    kept per ``a`` is the first passing one, or the failing attempt at the
    cap.  An empty ``a_list`` yields an empty report list.
    """
    if K_init > K_cap:
        raise ValueError(f"K_init {K_init} exceeds K_cap {K_cap}")
    reports: list[CarlemanReport] = []
    for a in a_list:
        K = float(K_init)
        while True:
            report = carleman_integrals(
                u, params, a, K, grid, strict_resolution=strict_resolution
            )
            if report.passed or K >= K_cap:
                reports.append(report)
                break
            K = min(2.0 * K, K_cap)
    return reports
