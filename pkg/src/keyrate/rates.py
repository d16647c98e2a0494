"""Secret-key rate evaluation and the nested optimizations over attacks
and preprocessing noise.

The central quantity is, for a Bell spectrum lam and a bit-flip
probability q,

    rate(lam, q) = S(U | E) - H(U | Y)

where U is Alice's measurement outcome flipped with probability q, E is
an adversary holding a purification of the Bell-diagonal state, and Y is
Bob's outcome.  Lower bounds maximize over q after minimizing over the
protocol's feasible attack family; the bitwise upper bound swaps the
nesting order.

All optimizations are one-dimensional on compact intervals and use a
deterministic uniform grid followed by golden-section refinement, so
results are bit-reproducible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .protocol import BellSpectrum, FeasibleFamily, ProtocolSpec
from .qmat import (
    DensityOperator,
    binary_entropy,
    partial_trace,
    purify,
    von_neumann_entropy,
)

__all__ = [
    "POSITIVITY_EPS",
    "INNER_GRID",
    "OUTER_GRID",
    "REFINE_TOL",
    "BISECT_TOL",
    "BracketError",
    "PreprocessingParams",
    "RateReport",
    "eve_conditionals",
    "s_u_given_e",
    "h_u_given_y",
    "rate",
    "inner_min",
    "lower_bound",
    "upper_bound_bitwise",
    "threshold",
]

# Rates smaller than this are treated as "not positive" when locating
# thresholds: at the q = 1/2 boundary the rate is identically zero, so the
# optimum beyond the threshold evaluates to 0 up to float noise rather
# than to a negative number.
POSITIVITY_EPS = 1e-12

INNER_GRID = 129
OUTER_GRID = 65
REFINE_TOL = 1e-7
BISECT_TOL = 1e-5

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

UPPER_BOUND_NOTE = (
    "bitwise flip preprocessing only; no auxiliary classical message, "
    "no quantum preprocessing"
)


class BracketError(RuntimeError):
    """Threshold bisection found no positivity change over the bracket."""


@dataclass(frozen=True)
class PreprocessingParams:
    """Bit-flip probability of Alice's classical preprocessing channel.

    With enabled=False the flip probability is pinned to zero regardless
    of q.
    """

    q: float = 0.0
    enabled: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.q <= 0.5:
            raise ValueError(f"flip probability {self.q!r} outside [0, 1/2]")

    @property
    def effective_q(self) -> float:
        return self.q if self.enabled else 0.0


@dataclass(frozen=True)
class RateReport:
    """One evaluated rate-bound point with optimizer diagnostics."""

    protocol: str
    noise_name: str
    noise: float
    bound: str
    rate: float
    q_opt: float
    lambda_worst: BellSpectrum
    preprocessing: bool
    iterations: int
    wall_time_s: float
    overlap: Optional[float] = None
    p_pass: Optional[float] = None
    note: Optional[str] = None


@lru_cache(maxsize=8192)
def eve_conditionals(
    lam: BellSpectrum,
) -> tuple[DensityOperator, DensityOperator, DensityOperator]:
    """Adversary states conditioned on Alice's measurement outcome.

    From the purification of the Bell-diagonal state with spectrum lam,
    Alice's z measurement (outcomes 0/1 with probability 1/2 each)
    leaves the adversary with rho_E^0, rho_E^1; unconditioned she holds
    rho_E = diag(lam).  Returns (rho_E^0, rho_E^1, rho_E).
    """
    psi = purify(lam)
    conditional = []
    for outcome in (0, 1):
        v = psi.amplitudes.reshape(2, 2, 4)[outcome].reshape(-1)
        norm = np.linalg.norm(v)
        be = DensityOperator((2, 4), np.outer(v, v.conj()) / (norm * norm))
        conditional.append(partial_trace(be, keep=[1]))
    rho_e = DensityOperator((4,), np.diag(np.asarray(list(lam), dtype=np.complex128)))
    return conditional[0], conditional[1], rho_e


def s_u_given_e(lam: BellSpectrum, p: PreprocessingParams) -> float:
    """Conditional entropy S(U|E) of the flipped key bit given Eve, in bits.

    Builds rho_UE = sum_u (1/2) |u><u| (x) [(1-q) rho_E^u + q rho_E^{1-u}]
    and returns S(rho_UE) - S(rho_E).
    """
    q = p.effective_q
    rho_e0, rho_e1, rho_e = eve_conditionals(lam)
    mix0 = (1.0 - q) * rho_e0.matrix + q * rho_e1.matrix
    mix1 = (1.0 - q) * rho_e1.matrix + q * rho_e0.matrix
    block = np.zeros((8, 8), dtype=np.complex128)
    block[:4, :4] = 0.5 * mix0
    block[4:, 4:] = 0.5 * mix1
    rho_ue = DensityOperator((2, 4), block)
    return von_neumann_entropy(rho_ue) - von_neumann_entropy(rho_e)


def h_u_given_y(qber: float, p: PreprocessingParams) -> float:
    """Error-correction cost H(U|Y) = h(Q(1-q) + (1-Q)q), in bits.

    Bell-diagonal marginals are uniform, so the conditional entropy
    reduces to the binary entropy of the effective U <-> Y error rate.
    """
    if not 0.0 <= qber <= 0.5:
        raise ValueError(f"QBER {qber!r} outside [0, 1/2]")
    q = p.effective_q
    return binary_entropy(qber * (1.0 - q) + (1.0 - qber) * q)


def rate(lam: BellSpectrum, p: PreprocessingParams) -> float:
    """Key rate S(U|E) - H(U|Y) for one attack spectrum; may be negative."""
    return s_u_given_e(lam, p) - h_u_given_y(lam.qber(), p)


def _golden_max(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float,
) -> tuple[float, float]:
    """Golden-section maximization on [lo, hi] to interval width tol.

    The returned point is compared against both bracket endpoints, so
    boundary maxima are not lost.  Ties prefer the smaller argument.
    """
    f_lo, f_hi = f(lo), f(hi)
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    f_c, f_d = f(c), f(d)
    while b - a > tol:
        if f_c >= f_d:
            b, d, f_d = d, c, f_c
            c = b - _GOLDEN * (b - a)
            f_c = f(c)
        else:
            a, c, f_c = c, d, f_d
            d = a + _GOLDEN * (b - a)
            f_d = f(d)
    mid = 0.5 * (a + b)
    candidates = [(f(mid), mid), (f_lo, lo), (f_hi, hi)]
    best_val = max(v for v, _ in candidates)
    best_x = min(x for v, x in candidates if v == best_val)
    return best_x, best_val


def _grid_golden_max(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    n_grid: int,
    tol: float,
) -> tuple[float, float]:
    """Uniform grid scan followed by golden-section refinement around the
    grid argmax (against the adjacent cells only when it is an endpoint)."""
    if hi - lo <= tol:
        x = lo
        return x, f(x)
    xs = np.linspace(lo, hi, n_grid)
    vals = [f(float(x)) for x in xs]
    i = int(np.argmax(vals))
    a = float(xs[max(i - 1, 0)])
    b = float(xs[min(i + 1, n_grid - 1)])
    x_ref, v_ref = _golden_max(f, a, b, tol)
    candidates = [(v_ref, x_ref), (vals[i], float(xs[i]))]
    best_val = max(v for v, _ in candidates)
    best_x = min(x for v, x in candidates if v == best_val)
    return best_x, best_val


def inner_min(
    family: FeasibleFamily,
    noise: float,
    p: PreprocessingParams,
    n_grid: int = INNER_GRID,
    tol: float = REFINE_TOL,
    _counter: Optional[list] = None,
) -> tuple[float, BellSpectrum]:
    """Worst-case rate over the feasible attack family at fixed q.

    Zero-parameter families are evaluated directly; one-parameter
    families are minimized by grid scan plus golden-section refinement.
    Returns (rate, minimizing spectrum).
    """
    family.check_noise(noise)

    def objective(t: Optional[float]) -> float:
        lam = family.point(noise, t)
        if _counter is not None:
            _counter[0] += 1
        return rate(lam, p)

    if family.n_free == 0:
        lam = family.point(noise)
        return objective(None), lam

    lo, hi = family.bounds(noise)
    t_best, neg_val = _grid_golden_max(lambda t: -objective(t), lo, hi, n_grid, tol)
    return -neg_val, family.point(noise, t_best)


def lower_bound(
    spec: ProtocolSpec,
    noise: float,
    preprocessing: bool = True,
    inner_grid: int = INNER_GRID,
    outer_grid: int = OUTER_GRID,
    refine_tol: float = REFINE_TOL,
) -> RateReport:
    """Achievable key rate: max over flip probability q of the worst-case
    attack rate.  With preprocessing disabled, q is pinned to 0."""
    spec.family.check_noise(noise)
    counter = [0]
    start = time.perf_counter()

    def inner_value(q: float) -> float:
        value, _ = inner_min(
            spec.family, noise, PreprocessingParams(q), inner_grid, refine_tol, counter
        )
        return value

    if preprocessing:
        q_opt, value = _grid_golden_max(inner_value, 0.0, 0.5, outer_grid, refine_tol)
    else:
        q_opt = 0.0
        value = inner_value(0.0)
    _, lam_worst = inner_min(
        spec.family, noise, PreprocessingParams(q_opt), inner_grid, refine_tol, counter
    )
    elapsed = time.perf_counter() - start
    return RateReport(
        protocol=spec.name,
        noise_name=spec.noise_parameter_name,
        noise=noise,
        bound="lower",
        rate=value,
        q_opt=q_opt,
        lambda_worst=lam_worst,
        preprocessing=preprocessing,
        iterations=counter[0],
        wall_time_s=elapsed,
        overlap=spec.overlap,
        p_pass=spec.pass_probability(noise) if spec.pass_probability else None,
    )


def upper_bound_bitwise(
    spec: ProtocolSpec,
    noise: float,
    inner_grid: int = INNER_GRID,
    outer_grid: int = OUTER_GRID,
    refine_tol: float = REFINE_TOL,
) -> RateReport:
    """Upper bound restricted to bitwise flip preprocessing: min over the
    attack family of the q-optimized rate (nesting order swapped relative
    to lower_bound).  By the minimax inequality it dominates the lower
    bound at the same noise."""
    spec.family.check_noise(noise)
    counter = [0]
    start = time.perf_counter()
    family = spec.family

    def best_q(t: Optional[float]) -> tuple[float, float]:
        lam = family.point(noise, t)

        def objective(q: float) -> float:
            counter[0] += 1
            return rate(lam, PreprocessingParams(q))

        return _grid_golden_max(objective, 0.0, 0.5, outer_grid, refine_tol)

    if family.n_free == 0:
        t_worst: Optional[float] = None
        q_opt, value = best_q(None)
    else:
        lo, hi = family.bounds(noise)
        t_worst, neg = _grid_golden_max(
            lambda t: -best_q(t)[1], lo, hi, inner_grid, refine_tol
        )
        value = -neg
        q_opt, _ = best_q(t_worst)
    lam_worst = family.point(noise, t_worst) if family.n_free else family.point(noise)
    elapsed = time.perf_counter() - start
    return RateReport(
        protocol=spec.name,
        noise_name=spec.noise_parameter_name,
        noise=noise,
        bound="upper",
        rate=value,
        q_opt=q_opt,
        lambda_worst=lam_worst,
        preprocessing=True,
        iterations=counter[0],
        wall_time_s=elapsed,
        overlap=spec.overlap,
        p_pass=spec.pass_probability(noise) if spec.pass_probability else None,
        note=UPPER_BOUND_NOTE,
    )


def threshold(
    spec: ProtocolSpec,
    bound: str = "lower",
    preprocessing: bool = True,
    bracket: Optional[tuple[float, float]] = None,
    tol: float = BISECT_TOL,
    inner_grid: int = INNER_GRID,
    outer_grid: int = OUTER_GRID,
    refine_tol: float = REFINE_TOL,
) -> float:
    """Largest tolerable noise: bisection on the chosen bound's positivity.

    The rate of an optimized-preprocessing bound never drops below zero
    (q = 1/2 always achieves exactly 0), so the bisection predicate is
    "rate > POSITIVITY_EPS" rather than a literal sign change.  Raises
    BracketError when the predicate is constant over the bracket.
    """
    if bound not in ("lower", "upper"):
        raise ValueError(f"unknown bound kind {bound!r}")
    if bracket is None:
        bracket = (0.0, 0.2) if spec.noise_parameter_name == "delta" else (0.0, 0.25)
    lo, hi = bracket
    if not lo < hi:
        raise ValueError(f"invalid bracket {bracket!r}")

    def positive(noise: float) -> bool:
        if bound == "lower":
            report = lower_bound(
                spec, noise, preprocessing, inner_grid, outer_grid, refine_tol
            )
        else:
            report = upper_bound_bitwise(
                spec, noise, inner_grid, outer_grid, refine_tol
            )
        return report.rate > POSITIVITY_EPS

    p_lo, p_hi = positive(lo), positive(hi)
    if p_lo == p_hi:
        raise BracketError(
            f"{spec.name} {bound}-bound rate is "
            f"{'positive' if p_lo else 'non-positive'} on all of {bracket!r}"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if positive(mid) == p_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
