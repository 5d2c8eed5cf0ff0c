"""Integration engines with error estimates.

* :func:`integrate_1d` -- vectorised adaptive 10/21-point Gauss-Kronrod
  with QUADPACK-style error estimation, optional breakpoints, an oscillation
  period hint and infinite upper limits.
* :func:`integrate_nested` -- iterated adaptive quadrature in up to four
  dimensions with callable inner bounds.
* :func:`integrate_mc` -- stratified Monte Carlo over a product of regions
  with counter-based random streams, so results do not depend on the thread
  count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np


class IntegrationError(RuntimeError):
    """Raised when a caller demands a converged result and none was obtained."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and budgets shared by all engines.

    Parameters
    ----------
    rel_tol, abs_tol : float
        Requested accuracy; a result is converged when its error estimate is
        at most ``max(abs_tol, rel_tol * |value|)``.
    max_subdivisions : int
        Upper bound on the number of panels of a single 1-D integral.
    mc_samples : int
        Sample budget of :func:`integrate_mc`.
    seed : int
        Root of the counter-based random streams.
    oscillation_period_hint : float, optional
        Period of the integrand in the integration variable; panels are
        kept no longer than half of it on finite ranges.
    threads : int
        Worker threads for Monte Carlo blocks.  Never changes results.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-300
    max_subdivisions: int = 4000
    mc_samples: int = 200_000
    seed: int = 12345
    oscillation_period_hint: Optional[float] = None
    threads: int = 1

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be positive")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def with_(self, **changes) -> "QuadratureSpec":
        return replace(self, **changes)


@dataclass(frozen=True)
class IntegralResult:
    """Value, error estimate, number of integrand evaluations and status."""

    value: float
    error_estimate: float
    evaluations: int
    converged: bool
    notes: tuple = field(default=(), compare=False)

    def require(self, what: str = "integral") -> "IntegralResult":
        if not self.converged:
            raise IntegrationError(
                f"{what} did not converge (value {self.value!r}, error {self.error_estimate!r})"
            )
        return self

    def scaled(self, factor: float) -> "IntegralResult":
        return replace(self, value=self.value * factor, error_estimate=self.error_estimate * abs(factor))

    def __add__(self, other: "IntegralResult") -> "IntegralResult":
        return IntegralResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.evaluations + other.evaluations,
            self.converged and other.converged,
            self.notes + other.notes,
        )


def _tolerance(value, spec: QuadratureSpec) -> float:
    return max(spec.abs_tol, spec.rel_tol * float(np.max(np.abs(value))))


# 21-point Gauss-Kronrod abscissae and weights (QUADPACK qk21).
_XGK = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0,
])
_WGK = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525000750, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])
_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
_WK = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes (1, 3, ..., 9 from each end).
_WG_FULL = np.zeros(21)
_WG_FULL[[1, 3, 5, 7, 9]] = _WG
_WG_FULL[[19, 17, 15, 13, 11]] = _WG
_EPS = np.finfo(float).eps
_UFLOW = np.finfo(float).tiny


#: Panels evaluated per integrand call, bounding peak memory.
GK_CHUNK = 8192


def _gk21(f, a: np.ndarray, b: np.ndarray):
    """Kronrod estimate and QUADPACK error for panels [a_i, b_i].

    Returns (values, errors) with values of shape (m,) + value_shape and
    errors of shape (m,) (max-norm over value components).
    """
    if len(a) > GK_CHUNK:
        parts = [_gk21(f, a[i:i + GK_CHUNK], b[i:i + GK_CHUNK]) for i in range(0, len(a), GK_CHUNK)]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
    half = 0.5 * (b - a)
    centre = 0.5 * (a + b)
    x = centre[:, None] + half[:, None] * _NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float)
    vshape = fx.shape[1:]
    fx = fx.reshape((len(a), 21) + vshape)
    hx = half.reshape((-1,) + (1,) * len(vshape))
    wk = _WK.reshape((1, 21) + (1,) * len(vshape))
    wg = _WG_FULL.reshape((1, 21) + (1,) * len(vshape))
    resk = np.sum(wk * fx, axis=1)
    resg = np.sum(wg * fx, axis=1)
    mean = 0.5 * resk
    resabs = np.sum(wk * np.abs(fx), axis=1) * np.abs(hx)
    resasc = np.sum(wk * np.abs(fx - mean[:, None]), axis=1) * np.abs(hx)
    resk = resk * hx
    err = np.abs((resk - resg * hx))
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where(
            (resasc != 0) & (err != 0),
            resasc * np.minimum(1.0, (200 * err / np.where(resasc == 0, 1, resasc)) ** 1.5),
            err,
        )
    floor = np.where(resabs > _UFLOW / (50 * _EPS), 50 * _EPS * resabs, 0.0)
    err = np.maximum(scaled, floor)
    if vshape:
        err = err.reshape(len(a), -1).max(axis=1)
    return resk, err


def _initial_edges(a: float, b: float, points, hint: Optional[float], max_panels: int):
    edges = [a, b]
    if points is not None:
        edges += [p for p in points if a < p < b]
    edges = np.unique(np.asarray(edges, dtype=float))
    if hint is not None and np.isfinite(b):
        half = 0.5 * abs(hint)
        pieces = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            n = max(1, int(math.ceil((hi - lo) / half)))
            pieces.append(np.linspace(lo, hi, n + 1)[:-1])
        pieces.append([edges[-1]])
        edges = np.concatenate(pieces)
    if len(edges) - 1 > max_panels:
        raise ValueError(
            f"oscillation hint requires {len(edges) - 1} panels, above max_subdivisions={max_panels}"
        )
    return edges


def integrate_1d(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    spec: QuadratureSpec = QuadratureSpec(),
    points: Optional[Sequence[float]] = None,
) -> IntegralResult:
    """Adaptive Gauss-Kronrod quadrature of a vectorised integrand.

    Parameters
    ----------
    f : callable
        Maps an array of abscissae of shape (n,) to values of shape (n,) or
        (n, k) for vector-valued integrands.
    a, b : float
        Limits; ``b`` may be ``np.inf``.  ``a`` must be finite.
    spec : QuadratureSpec
    points : sequence of float, optional
        Interior breakpoints (kinks, singularities, branch switches).

    Returns
    -------
    IntegralResult
        ``converged`` is False if the subdivision budget ran out.
    """
    a, b = float(a), float(b)
    if not np.isfinite(a):
        raise ValueError("lower limit must be finite")
    if b == a:
        return IntegralResult(0.0, 0.0, 0, True)
    if b < a:
        return integrate_1d(f, b, a, spec, points).scaled(-1.0)

    if np.isinf(b):
        g = f

        def f(t):  # noqa: F811 - x = a + t/(1 - t)
            t = np.asarray(t)
            one_m = 1.0 - t
            x = a + t / one_m
            jac = 1.0 / (one_m * one_m)
            val = np.asarray(g(x), dtype=float)
            return val * jac.reshape((-1,) + (1,) * (val.ndim - 1))

        if points is not None:
            points = [(p - a) / (1.0 + p - a) for p in points if p > a]
        a, b = 0.0, 1.0
        hint = None
    else:
        hint = spec.oscillation_period_hint

    edges = _initial_edges(a, b, points, hint, spec.max_subdivisions)
    lo, hi = edges[:-1], edges[1:]
    vals, errs = _gk21(f, lo, hi)
    evals = 21 * len(lo)
    converged = False
    while True:
        total = vals.sum(axis=0)
        err = float(errs.sum())
        tol = _tolerance(total, spec)
        if err <= tol:
            converged = True
            break
        if len(lo) >= spec.max_subdivisions:
            break
        # Bisect every panel above its share of the tolerance, worst first,
        # without exceeding the panel budget.
        room = spec.max_subdivisions - len(lo)
        order = np.argsort(-errs, kind="stable")
        share = tol / len(lo)
        pick = order[errs[order] > share][: max(1, room)]
        if len(pick) == 0:
            pick = order[:1]
        keep = np.ones(len(lo), bool)
        keep[pick] = False
        mid = 0.5 * (lo[pick] + hi[pick])
        if np.any((mid <= lo[pick]) | (mid >= hi[pick])):
            break  # panels at floating-point resolution
        new_lo = np.concatenate([lo[pick], mid])
        new_hi = np.concatenate([mid, hi[pick]])
        nv, ne = _gk21(f, new_lo, new_hi)
        evals += 21 * len(new_lo)
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        vals = np.concatenate([vals[keep], nv])
        errs = np.concatenate([errs[keep], ne])
        # Sum in position order so the result is independent of refinement history.
        pos = np.argsort(lo, kind="stable")
        lo, hi, vals, errs = lo[pos], hi[pos], vals[pos], errs[pos]

    total = vals.sum(axis=0)
    value = float(total) if np.ndim(total) == 0 else total
    if not np.all(np.isfinite(total)):
        return IntegralResult(value, math.inf, evals, False, ("non-finite integrand",))
    return IntegralResult(value, float(errs.sum()), evals, converged)


def integrate_nested(
    f: Callable[..., np.ndarray],
    bounds: Sequence[tuple],
    spec: QuadratureSpec = QuadratureSpec(),
    points: Optional[Sequence[Optional[Callable[..., Sequence[float]]]]] = None,
) -> IntegralResult:
    """Iterated adaptive quadrature over up to four dimensions.

    Parameters
    ----------
    f : callable
        ``f(x0, x1, ..., x_{d-1})`` with array arguments of equal shape,
        vectorised over the innermost variable.
    bounds : sequence of (lo, hi)
        ``bounds[k]`` limits ``x_k``; inner limits may be callables of the
        outer variables ``(x0, ..., x_{k-1})`` returning floats, which
        describes mapped simplices and other non-box domains.
    points : sequence, optional
        Per-dimension callables of the outer variables returning breakpoints.

    Notes
    -----
    Each inner integral is solved to ``spec``; the returned error is the
    outer error plus the largest inner error times the outer interval
    length, a bound on the integrated inner errors.
    """
    d = len(bounds)
    if not 1 <= d <= 4:
        raise ValueError("integrate_nested supports 1 to 4 dimensions")
    points = list(points) if points is not None else [None] * d
    state = {"evals": 0, "ok": True}

    def limits(k, outer):
        lo, hi = bounds[k]
        lo = lo(*outer) if callable(lo) else lo
        hi = hi(*outer) if callable(hi) else hi
        pts = points[k](*outer) if points[k] is not None else None
        return float(lo), float(hi), pts

    def level(k, outer):
        lo, hi, pts = limits(k, outer)
        if k == d - 1:
            def g(x):
                args = [np.full_like(x, o) for o in outer] + [x]
                return np.asarray(f(*args), dtype=float)
            res = integrate_1d(g, lo, hi, spec, pts)
            state["evals"] += res.evaluations
            state["ok"] &= res.converged
            return res

        worst = [0.0]

        def g(xs):
            out = np.empty(len(xs))
            for i, x in enumerate(xs):
                r = level(k + 1, outer + (float(x),))
                out[i] = r.value
                worst[0] = max(worst[0], r.error_estimate)
            return out

        res = integrate_1d(g, lo, hi, spec, pts)
        state["ok"] &= res.converged
        inner = worst[0] * abs(hi - lo)
        return IntegralResult(float(res.value), res.error_estimate + inner, 0, res.converged)

    res = level(0, ())
    return IntegralResult(res.value, res.error_estimate, state["evals"], state["ok"] and res.converged)


# --------------------------------------------------------------------------
# Monte Carlo
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Stratum:
    """One cell of a stratified sampling plan.

    ``draw(rng, n)`` returns ``n`` points of shape (n, d) uniformly
    distributed over a set of measure ``volume``.
    """

    volume: float
    draw: Callable[[np.random.Generator, int], np.ndarray]
    label: str = ""


class RegionSampler:
    """Base class for seeded samplers of a product region A x B."""

    def strata(self) -> Sequence[Stratum]:
        raise NotImplementedError


@dataclass(frozen=True)
class BoxPairSampler(RegionSampler):
    """Uniform pairs from two axis-aligned boxes, one stratum."""

    box_A: tuple
    box_B: tuple

    def strata(self):
        lo_a, hi_a = (np.asarray(v, float) for v in self.box_A)
        lo_b, hi_b = (np.asarray(v, float) for v in self.box_B)
        vol = float(np.prod(hi_a - lo_a) * np.prod(hi_b - lo_b))
        lo = np.concatenate([lo_a, lo_b])
        span = np.concatenate([hi_a - lo_a, hi_b - lo_b])

        def draw(rng, n):
            return lo + span * rng.random((n, len(lo)))

        return [Stratum(vol, draw, "box")]


MC_BLOCK = 4096


def _block_stats(f, stratum: Stratum, seed: int, s_index: int, b_index: int, n: int):
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(s_index, b_index))
    rng = np.random.Generator(np.random.Philox(ss))
    x = stratum.draw(rng, n)
    y = np.asarray(f(x), dtype=float)
    mean = float(np.mean(y))
    m2 = float(np.sum((y - mean) ** 2))
    return n, mean, m2


def _chan(acc, blk):
    n1, m1, s1 = acc
    n2, m2, s2 = blk
    n = n1 + n2
    delta = m2 - m1
    return n, m1 + delta * n2 / n, s1 + s2 + delta * delta * n1 * n2 / n


def integrate_mc(
    f: Callable[[np.ndarray], np.ndarray],
    region_sampler: RegionSampler,
    spec: QuadratureSpec = QuadratureSpec(),
) -> IntegralResult:
    """Stratified Monte Carlo estimate of the integral of ``f`` over A x B.

    Samples are drawn in fixed-size blocks; block ``k`` of stratum ``s``
    draws from a Philox stream keyed by ``(seed, s, k)``.  Block statistics
    are merged in index order, so the result is bit-identical for any
    ``spec.threads``.  Samples are allocated to strata in proportion to
    their volume (at least two blocks' worth of points per stratum is not
    enforced, only at least two points).
    """
    strata = list(region_sampler.strata())
    if not strata:
        raise ValueError("sampler has no strata")
    vols = np.array([s.volume for s in strata], dtype=float)
    if np.any(~np.isfinite(vols)) or np.any(vols < 0) or vols.sum() <= 0:
        raise ValueError("regions must have finite, positive total volume")
    frac = vols / vols.sum()
    counts = np.maximum(2, np.floor(frac * spec.mc_samples).astype(int))
    counts[vols == 0] = 0

    jobs = []
    for s_index, (st, n) in enumerate(zip(strata, counts)):
        for b_index, start in enumerate(range(0, n, MC_BLOCK)):
            jobs.append((s_index, b_index, min(MC_BLOCK, n - start)))

    def run(job):
        s_index, b_index, n = job
        return _block_stats(f, strata[s_index], spec.seed, s_index, b_index, n)

    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            stats = list(pool.map(run, jobs))
    else:
        stats = [run(j) for j in jobs]

    acc = [(0, 0.0, 0.0) for _ in strata]
    for (s_index, _, _), blk in zip(jobs, stats):
        acc[s_index] = blk if acc[s_index][0] == 0 else _chan(acc[s_index], blk)

    value = 0.0
    var = 0.0
    for (n, mean, m2), vol in zip(acc, vols):
        if n == 0:
            continue
        value += vol * mean
        if n > 1:
            var += vol * vol * (m2 / (n - 1)) / n
    err = math.sqrt(var)
    evals = int(counts.sum())
    return IntegralResult(float(value), err, evals, err <= _tolerance(value, spec))
