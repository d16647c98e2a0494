"""Protocol definitions, sifting/twirl maps and QBER-constrained attack sets.

A protocol is a list of encoding/decoding operator pairs (A_j, B_j) with
sifting weights, together with an analytic family describing which
Bell-diagonal two-qubit states are consistent with an observed noise
level.  The two completely positive maps implemented here are

    d1_map:   the protocol-defined mixture over the sifted branches
    d2_twirl: the correlated Pauli twirl projecting any two-qubit state
              onto the Bell diagonal

Their composition applied to an arbitrary channel-attack state produces
the Bell spectra that the rate module minimizes over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .qmat import BELL_VECTORS, DensityOperator

__all__ = [
    "QBER_TOL",
    "BellSpectrum",
    "FeasibleFamily",
    "ProtocolSpec",
    "bb84",
    "six_state",
    "b92",
    "DEFAULT_B92_OVERLAP",
    "d1_map",
    "d2_twirl",
    "bell_spectrum",
    "sample_feasible_set",
    "b92_state",
]

# Acceptance window of the feasible-set sampler on each observed error rate.
QBER_TOL = 5e-3

_I2 = np.eye(2, dtype=np.complex128)
_SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)
_HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2.0)
# Unitary sending the z basis onto the y basis, paired with its complex
# conjugate on Bob's side so the noiseless state stays a fixed point.
_Y_ENCODER = np.array([[1, 1j], [1, -1j]], dtype=np.complex128) / math.sqrt(2.0)

_TWIRL_OPS = tuple(
    np.kron(op, op) for op in (_I2, _SZ, _SX, _SZ @ _SX)
)

DEFAULT_B92_OVERLAP = math.cos(math.pi / 4.0)


@dataclass(frozen=True)
class BellSpectrum:
    """Diagonal of a two-qubit state in the Bell basis.

    The z (x) z bit-error probability of such a state is lam3 + lam4.
    """

    lam1: float
    lam2: float
    lam3: float
    lam4: float

    def __post_init__(self) -> None:
        lams = (self.lam1, self.lam2, self.lam3, self.lam4)
        for value in lams:
            if not -1e-12 <= value <= 1.0 + 1e-12:
                raise ValueError(f"Bell weight {value!r} outside [0, 1]")
        total = sum(lams)
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"Bell weights sum to {total!r}, not 1")

    def qber(self) -> float:
        return self.lam3 + self.lam4

    def as_array(self) -> np.ndarray:
        return np.array([self.lam1, self.lam2, self.lam3, self.lam4])

    def __iter__(self):
        return iter((self.lam1, self.lam2, self.lam3, self.lam4))


@dataclass(frozen=True)
class FeasibleFamily:
    """Analytic parametrization of the attack states consistent with one
    observed noise value.

    n_free is 0 for a single point or 1 for a one-parameter curve whose
    box bounds depend on the noise level.
    """

    n_free: int
    noise_domain: tuple[float, float]
    point_fn: Callable[[float, Optional[float]], BellSpectrum]
    bounds_fn: Optional[Callable[[float], tuple[float, float]]] = None

    def check_noise(self, noise: float) -> None:
        lo, hi = self.noise_domain
        if not lo <= noise <= hi:
            raise ValueError(f"noise {noise!r} outside domain [{lo}, {hi}]")

    def bounds(self, noise: float) -> tuple[float, float]:
        if self.n_free == 0 or self.bounds_fn is None:
            raise ValueError("family has no free parameter")
        self.check_noise(noise)
        return self.bounds_fn(noise)

    def point(self, noise: float, t: Optional[float] = None) -> BellSpectrum:
        self.check_noise(noise)
        if self.n_free == 0:
            if t is not None:
                raise ValueError("family has no free parameter")
            return self.point_fn(noise, None)
        if t is None:
            raise ValueError("family needs a free parameter value")
        return self.point_fn(noise, t)


@dataclass(frozen=True)
class ProtocolSpec:
    """Operator data and feasible family of one protocol."""

    name: str
    branches: tuple[tuple[np.ndarray, np.ndarray, float], ...]
    family: FeasibleFamily
    noise_parameter_name: str
    overlap: Optional[float] = None
    pass_probability: Optional[Callable[[float], float]] = field(
        default=None, compare=False
    )

    def __post_init__(self) -> None:
        if not self.branches:
            raise ValueError("protocol needs at least one branch")
        total = sum(w for _, _, w in self.branches)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"branch weights sum to {total!r}, not 1")


def _normalized_branches(raw) -> tuple[tuple[np.ndarray, np.ndarray, float], ...]:
    total = sum(w for _, _, w in raw)
    return tuple(
        (np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128), w / total)
        for a, b, w in raw
    )


def bb84() -> ProtocolSpec:
    """BB84: z and x encodings, each with sifting weight 1/2.

    The observed QBER Q leaves one free attack parameter t in [0, Q]:
    lam = (1 - Q - t, t, t, Q - t).
    """

    def point(noise: float, t: Optional[float]) -> BellSpectrum:
        return BellSpectrum(1.0 - noise - t, t, t, noise - t)

    family = FeasibleFamily(
        n_free=1,
        noise_domain=(0.0, 0.5),
        point_fn=point,
        bounds_fn=lambda noise: (0.0, noise),
    )
    branches = _normalized_branches(
        [(_HADAMARD, _HADAMARD, 0.5), (_I2, _I2, 0.5)]
    )
    return ProtocolSpec("bb84", branches, family, "QBER")


def six_state() -> ProtocolSpec:
    """Six-state protocol: z, x and y encodings, weight 1/3 each.

    Equal observed error rates in the three bases pin the attack to the
    single point lam = (1 - 3Q/2, Q/2, Q/2, Q/2); Q > 2/3 is rejected
    because lam1 would be negative.
    """

    def point(noise: float, t: Optional[float]) -> BellSpectrum:
        return BellSpectrum(1.0 - 1.5 * noise, noise / 2.0, noise / 2.0, noise / 2.0)

    family = FeasibleFamily(
        n_free=0,
        noise_domain=(0.0, 2.0 / 3.0),
        point_fn=point,
    )
    branches = _normalized_branches(
        [
            (_I2, _I2, 1.0 / 3.0),
            (_HADAMARD, _HADAMARD, 1.0 / 3.0),
            (_Y_ENCODER, _Y_ENCODER.conj(), 1.0 / 3.0),
        ]
    )
    return ProtocolSpec("six-state", branches, family, "QBER")


def _b92_operators(overlap: float) -> tuple[np.ndarray, np.ndarray]:
    """Encoding and filtering operators for signal states
    cos(theta)|0> +- sin(theta)|1> with <phi0|phi1> = cos(2 theta) = overlap.

    Phases of the orthogonal decoding bras are fixed so that the
    noiseless filtered state is the Phi1 Bell state.
    """
    theta = math.acos(overlap) / 2.0
    c, s = math.cos(theta), math.sin(theta)
    encoder = np.array([[c, s], [c, -s]], dtype=np.complex128)
    filt = np.array([[s, c], [s, -c]], dtype=np.complex128)
    return encoder, filt


def b92(overlap: float = DEFAULT_B92_OVERLAP) -> ProtocolSpec:
    """B92 with two signal states of the given overlap, strictly in (0, 1).

    The noise parameter is the depolarization strength delta of the
    benchmark channel; the feasible family is the single twirled
    post-filter state produced by b92_state.
    """
    if not 0.0 < overlap < 1.0:
        raise ValueError(f"overlap {overlap!r} outside the open interval (0, 1)")

    def point(noise: float, t: Optional[float]) -> BellSpectrum:
        sigma, _, _ = b92_state(overlap, noise)
        return bell_spectrum(sigma)

    family = FeasibleFamily(
        n_free=0,
        noise_domain=(0.0, 0.5 - 1e-9),
        point_fn=point,
    )
    encoder, filt = _b92_operators(overlap)
    return ProtocolSpec(
        "b92",
        _normalized_branches([(encoder, filt, 1.0)]),
        family,
        "delta",
        overlap=overlap,
        pass_probability=lambda noise: b92_state(overlap, noise)[1],
    )


def _require_two_qubit(rho: DensityOperator) -> None:
    if rho.dims != (2, 2):
        raise ValueError(f"expected a two-qubit state, got dims {rho.dims}")


def d1_map(spec: ProtocolSpec, rho: DensityOperator) -> DensityOperator:
    """Sifted mixture sum_j w_j (A_j x B_j) rho (A_j x B_j)^dagger.

    The output is renormalized to unit trace, which matters for
    protocols with non-unitary filtering branches.
    """
    _require_two_qubit(rho)
    out = np.zeros((4, 4), dtype=np.complex128)
    for a, b, w in spec.branches:
        k = np.kron(a, b)
        out += w * (k @ rho.matrix @ k.conj().T)
    tr = out.trace().real
    if tr < 1e-12:
        raise ValueError("all branches annihilate the input state")
    return DensityOperator((2, 2), out / tr)


def d2_twirl(rho: DensityOperator) -> DensityOperator:
    """Correlated Pauli twirl (1/4) sum_l (O_l x O_l) rho (O_l x O_l)^dagger.

    The output is diagonal in the Bell basis and has the same Bell-basis
    diagonal as the input.
    """
    _require_two_qubit(rho)
    out = np.zeros((4, 4), dtype=np.complex128)
    for op in _TWIRL_OPS:
        out += op @ rho.matrix @ op.conj().T
    return DensityOperator((2, 2), out / 4.0)


def bell_spectrum(rho: DensityOperator) -> BellSpectrum:
    """The four Bell-basis diagonal entries <Phi_i| rho |Phi_i>."""
    _require_two_qubit(rho)
    diag = [
        float(np.real(BELL_VECTORS[i].conj() @ rho.matrix @ BELL_VECTORS[i]))
        for i in range(4)
    ]
    return BellSpectrum(*diag)


def _branch_error_rates(spec: ProtocolSpec, rho: DensityOperator) -> Optional[list[float]]:
    """Observed bit-error rate of each sifted branch, or None if some
    branch annihilates the state."""
    rates = []
    for a, b, _ in spec.branches:
        k = np.kron(a, b)
        m = k @ rho.matrix @ k.conj().T
        tr = m.trace().real
        if tr < 1e-12:
            return None
        rates.append(float((m[1, 1].real + m[2, 2].real) / tr))
    return rates


def sample_feasible_set(
    spec: ProtocolSpec,
    qber: float,
    n_samples: int,
    seed: int,
) -> list[BellSpectrum]:
    """Monte-Carlo check of the analytic feasible family.

    Draws random two-qubit attack states, keeps those whose observed
    per-branch error rates all lie within QBER_TOL of the target, and
    returns the Bell spectra of d2_twirl(d1_map(...)) for the accepted
    states.  Deterministic for a fixed seed; may return an empty list.

    Plain induced-measure states concentrate at error rates near 1/2, so
    each draw is blended with the noiseless fixed point at a random
    weight to make acceptance at realistic QBER values practical.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if not 0.0 <= qber <= 1.0:
        raise ValueError(f"target error rate {qber!r} outside [0, 1]")

    rng = np.random.default_rng(seed)
    phi1 = np.outer(BELL_VECTORS[0], BELL_VECTORS[0].conj())
    blend_max = min(1.0, 6.0 * qber + 0.02)

    accepted: list[BellSpectrum] = []
    for _ in range(n_samples):
        # Induced-measure state: partial trace of a Gaussian pure state
        # on a 4 x 4 bipartition, i.e. M M^dagger for Gaussian M.
        m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        raw = m @ m.conj().T
        raw /= raw.trace().real
        weight = rng.uniform(0.0, blend_max)
        rho = DensityOperator((2, 2), (1.0 - weight) * phi1 + weight * raw)

        rates = _branch_error_rates(spec, rho)
        if rates is None:
            continue
        if all(abs(r - qber) <= QBER_TOL for r in rates):
            accepted.append(bell_spectrum(d2_twirl(d1_map(spec, rho))))
    return accepted


def b92_state(overlap: float, delta: float) -> tuple[DensityOperator, float, float]:
    """Twirled post-filter state of B92 over a depolarizing channel.

    The transmitted qubit passes through E_delta(rho) = (1-2 delta) rho
    + delta * identity (delta = 1/2 is fully depolarizing), then Bob's
    filter is applied and the surviving state renormalized.

    Returns (twirled state, filter pass probability, observed QBER).
    """
    if not 0.0 < overlap < 1.0:
        raise ValueError(f"overlap {overlap!r} outside the open interval (0, 1)")
    if not 0.0 <= delta < 0.5:
        raise ValueError(f"delta {delta!r} outside [0, 1/2)")

    encoder, filt = _b92_operators(overlap)
    phi1 = np.outer(BELL_VECTORS[0], BELL_VECTORS[0].conj())

    enc = np.kron(encoder, _I2)
    rho = enc @ phi1 @ enc.conj().T
    rho /= rho.trace().real

    # Depolarize the transmitted (second) qubit.
    rho_a = np.trace(rho.reshape(2, 2, 2, 2), axis1=1, axis2=3)
    rho = (1.0 - 2.0 * delta) * rho + delta * np.kron(rho_a, _I2)

    fl = np.kron(_I2, filt)
    filtered = fl @ rho @ fl.conj().T
    p_pass = float(filtered.trace().real)
    if p_pass < 1e-12:
        raise ValueError("filter pass probability vanished")

    sigma = d2_twirl(DensityOperator((2, 2), filtered / p_pass))
    q = bell_spectrum(sigma).qber()
    return sigma, p_pass, q
