"""Doubled-phase-space samplers for the input quantum states.

Each sampler returns pairs (alpha, alpha_tilde) distributed so that ensemble
averages of alpha * conj(alpha_tilde) reproduce normally-ordered moments of
the corresponding state.  Coherent states need a single deterministic pair;
squeezed vacuum uses the Gaussian construction over four real normal draws;
cat states are drawn from their canonical (Husimi-weighted) density by
rejection sampling.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSamplingError, InvalidArgumentError

# Rejection sampling gives up below this acceptance rate.
MIN_ACCEPTANCE = 1e-3


class StateKind(enum.Enum):
    COHERENT = "coherent"
    SQUEEZED_VACUUM = "squeezed"
    CAT = "cat"


@dataclass(frozen=True)
class StateSpec:
    """Parameters of one input state; only the fields relevant to `kind` are read.

    amplitude_mag / amplitude_phase define the coherent amplitude (coherent and
    cat states), squeeze_mag / squeeze_phase the squeezing parameter, and
    cat_phase the relative phase between the two coherent branches of a cat
    (0 = even cat).
    """

    kind: StateKind
    amplitude_mag: float = 0.0
    amplitude_phase: float = 0.0
    squeeze_mag: float = 0.0
    squeeze_phase: float = 0.0
    cat_phase: float = 0.0

    def __post_init__(self):
        for name in ("amplitude_mag", "amplitude_phase", "squeeze_mag",
                     "squeeze_phase", "cat_phase"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidArgumentError(f"{name} must be finite, got {value!r}")
        if self.amplitude_mag < 0:
            raise InvalidArgumentError("amplitude_mag must be >= 0")
        if self.squeeze_mag < 0:
            raise InvalidArgumentError("squeeze_mag must be >= 0")

    @property
    def beta(self) -> complex:
        """Coherent amplitude |beta| * exp(i*phase)."""
        return self.amplitude_mag * complex(math.cos(self.amplitude_phase),
                                            math.sin(self.amplitude_phase))


@dataclass(frozen=True)
class AmplitudePair:
    """One doubled-phase-space coordinate (alpha, alpha_tilde) for one mode."""

    alpha: complex
    alpha_tilde: complex

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and np.isfinite(self.alpha_tilde)):
            raise InvalidArgumentError("amplitude pair components must be finite")

    @property
    def occupation(self) -> float:
        return (self.alpha * np.conj(self.alpha_tilde)).real


def _require_kind(spec: StateSpec, kind: StateKind):
    if spec.kind is not kind:
        raise InvalidArgumentError(f"expected a {kind.value} spec, got {spec.kind.value}")


def _require_count(count: int):
    if count < 1:
        raise InvalidArgumentError(f"count must be a positive integer, got {count}")


# ---------------------------------------------------------------------------
# Array-level samplers (used by the trajectory simulator)
# ---------------------------------------------------------------------------

def coherent_pairs(spec: StateSpec, count: int) -> tuple[np.ndarray, np.ndarray]:
    """`count` copies of the deterministic pair (beta, beta)."""
    _require_kind(spec, StateKind.COHERENT)
    _require_count(count)
    alpha = np.full(count, spec.beta, dtype=np.complex128)
    return alpha, alpha.copy()


def squeezed_pairs(spec: StateSpec, count: int,
                   rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Sample squeezed-vacuum pairs from the factorized Gaussian construction.

    alpha = e^{i theta} nu + delta, alpha_tilde = e^{i theta} nu - delta with
    nu = sqrt(e^{-r} cosh r / 2) q3 + i sqrt(e^{r} cosh r / 2) q4 and
    delta = (q1 + i q2)/sqrt(2); q1..q4 independent unit-variance normals.
    """
    _require_kind(spec, StateKind.SQUEEZED_VACUUM)
    _require_count(count)
    r = spec.squeeze_mag
    theta = spec.squeeze_phase
    q = rng.standard_normal((4, count))
    delta = (q[0] + 1j * q[1]) / math.sqrt(2.0)
    nu = (math.sqrt(math.exp(-r) * math.cosh(r) / 2.0) * q[2]
          + 1j * math.sqrt(math.exp(r) * math.cosh(r) / 2.0) * q[3])
    rot = complex(math.cos(theta), math.sin(theta))
    return rot * nu + delta, rot * nu - delta


def _cat_center_weight(mu: np.ndarray, beta: complex, cat_phase: float) -> np.ndarray:
    """Unnormalized density of the cat's center coordinate mu.

    T(mu) = exp(-|mu-beta|^2) + exp(-|mu+beta|^2)
            + 2 exp(-|mu|^2 - |beta|^2) cos(2 Im(mu* beta) - cat_phase)
    i.e. the squared modulus of the two-branch coherent overlap.
    """
    d_plus = np.abs(mu - beta) ** 2
    d_minus = np.abs(mu + beta) ** 2
    cross = 2.0 * np.exp(-np.abs(mu) ** 2 - abs(beta) ** 2) * np.cos(
        2.0 * (np.conj(mu) * beta).imag - cat_phase)
    return np.exp(-d_plus) + np.exp(-d_minus) + cross


def _cat_proposal_weight(mu: np.ndarray, beta: complex) -> np.ndarray:
    """Unnormalized mixture of two unit-variance complex Gaussians at +-beta."""
    return np.exp(-np.abs(mu - beta) ** 2) + np.exp(-np.abs(mu + beta) ** 2)


def _cat_envelope(beta: complex, cat_phase: float) -> float:
    """Envelope constant c >= sup T/G, estimated on a coarse grid and doubled.

    The interference term is bounded by the proposal itself, so the true
    supremum never exceeds 2; doubling the grid maximum keeps the envelope
    valid against grid under-sampling.
    """
    half = abs(beta) + 4.0
    axis = np.linspace(-half, half, 81)
    mu = axis[:, None] + 1j * axis[None, :]
    ratio = _cat_center_weight(mu, beta, cat_phase) / _cat_proposal_weight(mu, beta)
    return 2.0 * float(ratio.max())


def cat_pairs(spec: StateSpec, count: int,
              rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Sample cat-state pairs from the canonical density.

    The density factorizes into an independent complex Gaussian in
    delta = (alpha - alpha_tilde)/2 and a bimodal weight for the center
    mu = (alpha + alpha_tilde)/2; the center is drawn by rejection against a
    two-Gaussian mixture at +-beta.
    """
    _require_kind(spec, StateKind.CAT)
    _require_count(count)
    if spec.amplitude_mag <= 0:
        raise InvalidArgumentError("cat sampling requires amplitude_mag > 0")
    beta = spec.beta
    envelope = _cat_envelope(beta, spec.cat_phase)

    centers = np.empty(count, dtype=np.complex128)
    filled = 0
    proposed = 0
    accepted = 0
    while filled < count:
        batch = max(1024, 2 * (count - filled))
        sign = np.where(rng.integers(0, 2, size=batch) == 0, 1.0, -1.0)
        g = rng.standard_normal((2, batch))
        mu = sign * beta + (g[0] + 1j * g[1]) / math.sqrt(2.0)
        accept_prob = _cat_center_weight(mu, beta, spec.cat_phase) / (
            envelope * _cat_proposal_weight(mu, beta))
        keep = rng.random(batch) < accept_prob
        kept = mu[keep]
        take = min(count - filled, kept.size)
        centers[filled:filled + take] = kept[:take]
        filled += take
        proposed += batch
        accepted += kept.size
        if proposed >= 8192 and accepted / proposed < MIN_ACCEPTANCE:
            raise DegenerateSamplingError(
                f"cat rejection sampling acceptance {accepted / proposed:.2e} "
                f"below {MIN_ACCEPTANCE:.0e}")
    q = rng.standard_normal((2, count))
    delta = (q[0] + 1j * q[1]) / math.sqrt(2.0)
    return centers + delta, centers - delta


def sample_pairs(spec: StateSpec, count: int,
                 rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Dispatch to the sampler for spec.kind (array form)."""
    if spec.kind is StateKind.COHERENT:
        return coherent_pairs(spec, count)
    if rng is None:
        raise InvalidArgumentError(f"{spec.kind.value} sampling needs a random generator")
    if spec.kind is StateKind.SQUEEZED_VACUUM:
        return squeezed_pairs(spec, count, rng)
    return cat_pairs(spec, count, rng)


# ---------------------------------------------------------------------------
# Pair-list API
# ---------------------------------------------------------------------------

def _to_pairs(alpha: np.ndarray, alpha_tilde: np.ndarray) -> list[AmplitudePair]:
    return [AmplitudePair(complex(a), complex(at)) for a, at in zip(alpha, alpha_tilde)]


def sample_coherent(spec: StateSpec, count: int) -> list[AmplitudePair]:
    return _to_pairs(*coherent_pairs(spec, count))


def sample_squeezed(spec: StateSpec, count: int,
                    rng: np.random.Generator) -> list[AmplitudePair]:
    return _to_pairs(*squeezed_pairs(spec, count, rng))


def sample_cat(spec: StateSpec, count: int,
               rng: np.random.Generator) -> list[AmplitudePair]:
    return _to_pairs(*cat_pairs(spec, count, rng))


def ensemble_occupation(pairs) -> tuple[float, float]:
    """Mean and standard error of Re(alpha * conj(alpha_tilde)) over pairs.

    Accepts a list of AmplitudePair or an (alpha, alpha_tilde) array tuple.
    """
    if isinstance(pairs, tuple):
        alpha, alpha_tilde = pairs
        alpha = np.asarray(alpha, dtype=np.complex128)
        alpha_tilde = np.asarray(alpha_tilde, dtype=np.complex128)
    else:
        if len(pairs) == 0:
            raise InvalidArgumentError("ensemble_occupation needs at least one pair")
        alpha = np.array([p.alpha for p in pairs], dtype=np.complex128)
        alpha_tilde = np.array([p.alpha_tilde for p in pairs], dtype=np.complex128)
    if alpha.size == 0:
        raise InvalidArgumentError("ensemble_occupation needs at least one pair")
    values = (alpha * np.conj(alpha_tilde)).real
    mean = float(values.mean())
    if values.size < 2:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / math.sqrt(values.size))
