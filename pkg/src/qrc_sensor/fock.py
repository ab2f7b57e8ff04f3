"""Truncated Fock-basis reference calculations.

State vectors, photon-number expectations, and Wigner-function grids computed
directly from Fock expansions.  These serve as ground truth for the
phase-space samplers and as tomography targets; nothing here touches the
stochastic simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .errors import InvalidArgumentError, NumericalConsistencyError, TruncationError
from .states import StateKind, StateSpec

# Pre-renormalization norm below this raises TruncationError.
MIN_NORM = 0.999

DEFAULT_CUTOFF = 40
DEFAULT_GRID_SIZE = 32
DEFAULT_EXTENT = 5.0


@dataclass(frozen=True)
class FockVector:
    """Pure state in a truncated number basis, renormalized after construction."""

    cutoff: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.cutoff < 1 or self.amplitudes.shape != (self.cutoff,):
            raise InvalidArgumentError("amplitudes must have shape (cutoff,)")
        norm = float(np.linalg.norm(self.amplitudes))
        if not (1.0 - 1e-6 <= norm <= 1.0 + 1e-6):
            raise InvalidArgumentError(f"state norm {norm} outside renormalization window")

    def mean_photon(self) -> float:
        n = np.arange(self.cutoff)
        return float(np.sum(n * np.abs(self.amplitudes) ** 2))


@dataclass(frozen=True)
class WignerGrid:
    """Wigner function sampled on a square quadrature grid.

    values[i, j] = W(x=axis[j], p=axis[i]) on the half-open grid
    axis[k] = -extent + k * (2*extent/size), under the convention
    x = sqrt(2) Re(alpha), p = sqrt(2) Im(alpha).  For even size the origin
    lies exactly on the grid.
    """

    size: int
    extent: float
    values: np.ndarray
    cell_area: float

    def __post_init__(self):
        if self.values.shape != (self.size, self.size):
            raise InvalidArgumentError("values must be a (size, size) array")

    @property
    def axis(self) -> np.ndarray:
        step = 2.0 * self.extent / self.size
        return -self.extent + step * np.arange(self.size)

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_area)


def _coherent_amplitudes(beta: complex, cutoff: int) -> np.ndarray:
    amps = np.empty(cutoff, dtype=np.complex128)
    amps[0] = math.exp(-abs(beta) ** 2 / 2.0)
    for n in range(1, cutoff):
        amps[n] = amps[n - 1] * beta / math.sqrt(n)
    return amps


def _squeezed_amplitudes(r: float, theta: float, cutoff: int) -> np.ndarray:
    # Even-photon expansion of S(zeta)|0>, zeta = r exp(2 i theta).
    amps = np.zeros(cutoff, dtype=np.complex128)
    amps[0] = 1.0 / math.sqrt(math.cosh(r))
    factor = -complex(math.cos(2 * theta), math.sin(2 * theta)) * math.tanh(r)
    n = 0
    while 2 * n + 2 < cutoff:
        step = factor * math.sqrt((2 * n + 1) * (2 * n + 2)) / (2.0 * (n + 1))
        amps[2 * n + 2] = amps[2 * n] * step
        n += 1
    return amps


def fock_vector(spec: StateSpec, cutoff: int = DEFAULT_CUTOFF) -> FockVector:
    """Expand spec in the number basis, renormalizing after truncation."""
    if cutoff < 2:
        raise InvalidArgumentError("cutoff must be >= 2")
    exact_norm_sq = 1.0
    if spec.kind is StateKind.COHERENT:
        amps = _coherent_amplitudes(spec.beta, cutoff)
    elif spec.kind is StateKind.SQUEEZED_VACUUM:
        amps = _squeezed_amplitudes(spec.squeeze_mag, spec.squeeze_phase, cutoff)
    else:
        beta = spec.beta
        rel = complex(math.cos(spec.cat_phase), math.sin(spec.cat_phase))
        amps = _coherent_amplitudes(beta, cutoff) + rel * _coherent_amplitudes(-beta, cutoff)
        # Exact squared norm of the unnormalized two-branch superposition.
        exact_norm_sq = 2.0 * (1.0 + math.exp(-2 * abs(beta) ** 2) * math.cos(spec.cat_phase))
    norm = float(np.linalg.norm(amps))
    captured = norm / math.sqrt(exact_norm_sq)
    if captured < MIN_NORM:
        mean = _nominal_mean_photon(spec)
        raise TruncationError(
            f"truncated norm fraction {captured:.6f} < {MIN_NORM} for {spec.kind.value} state",
            required_cutoff=int(math.ceil(4 * mean + 20)))
    return FockVector(cutoff, amps / norm)


def _nominal_mean_photon(spec: StateSpec) -> float:
    """Closed-form mean photon number, used only to size cutoff hints."""
    if spec.kind is StateKind.COHERENT:
        return spec.amplitude_mag ** 2
    if spec.kind is StateKind.SQUEEZED_VACUUM:
        return math.sinh(spec.squeeze_mag) ** 2
    b2 = spec.amplitude_mag ** 2
    overlap = math.exp(-2 * b2) * math.cos(spec.cat_phase)
    return b2 * (1 - overlap) / (1 + overlap)


def mean_photon(spec: StateSpec, cutoff: int = DEFAULT_CUTOFF) -> float:
    """Photon-number expectation from the truncated expansion."""
    return fock_vector(spec, cutoff).mean_photon()


def wigner_grid(spec: StateSpec, size: int = DEFAULT_GRID_SIZE,
                extent: float = DEFAULT_EXTENT,
                cutoff: int = DEFAULT_CUTOFF) -> WignerGrid:
    """Wigner function of spec on a size x size grid spanning [-extent, extent].

    Uses the displaced-parity Laguerre series over the Fock density matrix:
    W(alpha) = (1/pi) sum_{m,n} c_m conj(c_n) (-1)^m <n|D(2 alpha)|m>
    with x = sqrt(2) Re(alpha), p = sqrt(2) Im(alpha); the imaginary residue is
    asserted below 1e-9 and discarded.
    """
    if size < 2:
        raise InvalidArgumentError("grid size must be >= 2")
    if extent <= 0:
        raise InvalidArgumentError("extent must be positive")
    state = fock_vector(spec, cutoff)
    c = state.amplitudes

    step = 2.0 * extent / size
    axis = -extent + step * np.arange(size)
    x, p = np.meshgrid(axis, axis)
    disp = (np.sqrt(2.0) * (x + 1j * p)).ravel()  # 2*alpha
    abs2 = np.abs(disp) ** 2
    gauss = np.exp(-abs2 / 2.0)

    lg = gammaln(np.arange(cutoff) + 1.0)
    values = np.zeros(disp.shape, dtype=np.complex128)
    # <n|D(b)|m> for n >= m: sqrt(m!/n!) b^(n-m) e^{-|b|^2/2} L_m^{(n-m)}(|b|^2)
    for k in range(cutoff):
        disp_k = disp ** k if k else 1.0
        disp_kc = np.conj(disp) ** k if k else 1.0
        for m in range(cutoff - k):
            n = m + k
            lag = eval_genlaguerre(m, k, abs2)
            coeff = math.exp(0.5 * (lg[m] - lg[n]))
            elem = coeff * gauss * lag
            if k == 0:
                values += (np.abs(c[m]) ** 2 * (-1) ** m) * elem * disp_k
            else:
                # (m, n) pair contributes rho_mn (-1)^m <n|D|m> and its mirror
                # rho_nm (-1)^n <m|D|n> with <m|D|n> = sqrt(m!/n!)(-b*)^k e L_m^k.
                values += (c[m] * np.conj(c[n]) * (-1) ** m) * elem * disp_k
                values += (c[n] * np.conj(c[m]) * (-1) ** n * (-1) ** k) * elem * disp_kc
    values /= math.pi

    residue = float(np.max(np.abs(values.imag)))
    if residue >= 1e-6:
        raise NumericalConsistencyError(
            f"Wigner imaginary residue {residue:.3e} exceeds 1e-6")
    assert residue < 1e-9, f"Wigner imaginary residue {residue:.3e}"
    return WignerGrid(size, float(extent), values.real.reshape(size, size),
                      cell_area=step * step)
