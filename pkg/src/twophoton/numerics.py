"""Shared numerical kernels: sinc, tensor-grid trapezoid quadrature, bracketed
root finding and deterministic reductions.

Every kernel here is pure. Reductions over large arrays go through
``compensated_sum`` (``math.fsum``), so results do not depend on how work was
partitioned across threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import EmptyGrid, NoSignChange, NotConverged

SINC_SERIES_CUTOFF = 1e-4


def sinc(x):
    """Unnormalized sinc, ``sin(x)/x``, with a Taylor guard near zero.

    Below ``|x| < 1e-4`` the series ``1 - x**2/6 + x**4/120`` is used; its
    truncation error there is below 1e-24.
    """
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SINC_SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    x2 = x * x
    out = np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(safe) / safe)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Grid1D:
    """Uniform closed grid of ``n`` points on ``[lo, hi]``."""

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise EmptyGrid(f"grid needs at least 2 points, got {self.n}")
        if not self.hi > self.lo:
            raise EmptyGrid(f"grid needs hi > lo, got [{self.lo}, {self.hi}]")

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    def refined(self, factor: int = 2) -> "Grid1D":
        """Nested refinement: the spacing shrinks by ``factor``, old nodes are kept."""
        return Grid1D(self.lo, self.hi, (self.n - 1) * factor + 1)

    @classmethod
    def centered(cls, center: float, half_width: float, n: int) -> "Grid1D":
        return cls(center - half_width, center + half_width, n)


@dataclass(frozen=True)
class Tolerance:
    abs: float = 1e-10
    rel: float = 1e-6
    max_refinements: int = 1

    def __post_init__(self):
        if self.abs <= 0 or self.rel <= 0:
            raise ValueError("tolerances must be positive")

    def accepts(self, delta: float, value: float) -> bool:
        return abs(delta) <= max(self.abs, self.rel * abs(value))


class QuadResult(NamedTuple):
    value: float
    error: float
    grids: tuple


def compensated_sum(values) -> float:
    """Exactly rounded sum of all entries (Shewchuk, via ``math.fsum``)."""
    return math.fsum(np.ravel(np.asarray(values, dtype=float)))


def trapezoid_weights(points) -> np.ndarray:
    """Composite trapezoid weights for a (possibly non-uniform) 1-D node set."""
    x = np.asarray(points, dtype=float)
    if x.size < 2:
        raise EmptyGrid("trapezoid rule needs at least 2 nodes")
    dx = np.diff(x)
    if np.any(dx <= 0):
        raise EmptyGrid("grid nodes must be strictly increasing")
    w = np.zeros_like(x)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


def tensor_trapezoid(values, axes_points: Sequence) -> float:
    """Trapezoid integral of ``values`` sampled on the tensor grid ``axes_points``.

    ``values`` must have one axis per entry of ``axes_points`` (ij indexing).
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != len(axes_points):
        raise ValueError("one node array per value axis is required")
    weights = np.ones(())
    for pts in axes_points:
        weights = np.multiply.outer(weights, trapezoid_weights(pts))
    return compensated_sum(values * weights)


def integrate_axis(values, points, axis: int = -1) -> np.ndarray:
    """Trapezoid integral along one axis; the other axes are kept."""
    w = trapezoid_weights(points)
    values = np.moveaxis(np.asarray(values), axis, -1)
    return values @ w


def _as_grids(grids) -> tuple:
    if isinstance(grids, Grid1D):
        return (grids,)
    return tuple(grids)


def integrate(fn: Callable, grids, tol: Tolerance | None = None) -> QuadResult:
    """Integrate ``fn`` over a tensor product of :class:`Grid1D` axes.

    ``fn`` receives one broadcastable array per axis (``np.meshgrid`` with ``ij``
    indexing). The trapezoid estimate is compared against the estimate on the
    2x refined grids; refinement repeats up to ``tol.max_refinements`` times.

    Raises:
        NotConverged: the last refinement still changed the result by more
            than the tolerance.
    """
    tol = tol or Tolerance()
    grids = _as_grids(grids)

    def evaluate(gs):
        mesh = np.meshgrid(*[g.points for g in gs], indexing="ij")
        return tensor_trapezoid(np.broadcast_to(fn(*mesh), mesh[0].shape), [g.points for g in gs])

    coarse = evaluate(grids)
    for _ in range(max(tol.max_refinements, 1)):
        grids = tuple(g.refined() for g in grids)
        fine = evaluate(grids)
        delta = fine - coarse
        if tol.accepts(delta, fine):
            return QuadResult(fine, abs(delta), grids)
        coarse = fine
    raise NotConverged(
        f"trapezoid estimate changed by {abs(delta):.3e} after refinement "
        f"(allowed {max(tol.abs, tol.rel * abs(fine)):.3e})"
    )


def find_root(fn: Callable[[float], float], lo: float, hi: float,
              xtol: float = 1e-12, ftol: float | None = None, maxiter: int = 200) -> float:
    """Root of ``fn`` inside ``[lo, hi]`` by Brent's bisection/secant hybrid.

    Raises:
        NoSignChange: ``fn(lo)`` and ``fn(hi)`` have the same sign.
        NotConverged: ``|fn(root)|`` exceeds ``ftol`` after convergence in ``x``.
    """
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise NoSignChange(f"f({lo})={flo:.3e} and f({hi})={fhi:.3e} have the same sign")
    root, info = brentq(fn, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps,
                        maxiter=maxiter, full_output=True, disp=False)
    if not info.converged:
        raise NotConverged(f"root finder stopped after {info.iterations} iterations")
    if ftol is not None and abs(fn(root)) > ftol:
        raise NotConverged(f"|f(root)|={abs(fn(root)):.3e} exceeds {ftol:.1e}")
    return root


def scan_brackets(fn: Callable[[float], float], lo: float, hi: float, step: float):
    """Consecutive sub-intervals of ``[lo, hi]`` (spacing ``step``) where ``fn`` changes sign."""
    n = max(int(math.ceil((hi - lo) / step)), 1)
    xs = np.linspace(lo, hi, n + 1)
    fs = np.array([fn(x) for x in xs])
    brackets = []
    for i in range(n):
        if fs[i] == 0.0 or np.sign(fs[i]) != np.sign(fs[i + 1]):
            brackets.append((xs[i], xs[i + 1]))
    return brackets


def chunked_map(fn: Callable[[np.ndarray], np.ndarray], items: np.ndarray,
                chunk: int = 256, workers: int = 1) -> np.ndarray:
    """Apply ``fn`` to fixed-size chunks of ``items`` and concatenate in order.

    The chunk boundaries do not depend on ``workers``, so the output is
    bitwise identical for any worker count.
    """
    items = np.asarray(items)
    pieces = [items[i:i + chunk] for i in range(0, len(items), chunk)]
    if not pieces:
        raise EmptyGrid("nothing to evaluate")
    if workers <= 1:
        results = [fn(p) for p in pieces]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, pieces))
    return np.concatenate(results, axis=0)
