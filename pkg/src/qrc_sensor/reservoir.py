"""Driven-dissipative Kerr-lattice reservoir simulated by stochastic trajectories.

The reservoir is a 2D nearest-neighbour lattice of lossy Kerr modes under a
uniform coherent drive.  An optional input state enters through a cascaded
(unidirectional) source mode while a rectangular envelope f(t) is open.  Node
occupations are estimated as ensemble averages of Re(alpha_i * conj(atilde_i))
over independent trajectories integrated with a semi-implicit midpoint scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import seeding
from ._kernel import DIVERGENCE_LIMIT, integrate_batch
from .errors import ConvergenceError, DivergenceError, InvalidArgumentError
from .states import StateSpec, sample_pairs

DEFAULT_DT = 0.05
DEFAULT_T_FINAL = 25.0
DEFAULT_WINDOW = (10.0, 15.0)
DEFAULT_DRIVE = 0.5
DEFAULT_TRAJECTORIES = 10_000
MIDPOINT_ITERATIONS = 4
TRAJECTORY_BLOCK = 512           # fixed noise-stream granularity; never retune
MAX_DIVERGED_FRACTION = 0.01


@dataclass(frozen=True)
class ReservoirConfig:
    """Physical and numerical parameters of one reservoir realization."""

    n_nodes: int
    kerr: float
    decay: np.ndarray                 # gamma_i > 0
    detuning: np.ndarray              # Delta_i
    coupling: np.ndarray              # J, real symmetric, zero diagonal
    drive: complex                    # F
    source_decay: float               # gamma_s
    input_weights: np.ndarray         # W_i in [0, 1]
    eta: float                        # sum of squared input weights
    injection_window: tuple[float, float]
    dt: float
    t_final: float
    n_trajectories: int
    master_seed: int
    stratonovich_correction: bool = True
    degenerate_coupling: bool = False  # set when spectral radius was zero

    def __post_init__(self):
        n = self.n_nodes
        if n < 1:
            raise InvalidArgumentError("n_nodes must be >= 1")
        if self.kerr < 0:
            raise InvalidArgumentError("kerr must be >= 0")
        if self.decay.shape != (n,) or np.any(self.decay <= 0):
            raise InvalidArgumentError("decay must be positive, shape (n_nodes,)")
        if self.detuning.shape != (n,):
            raise InvalidArgumentError("detuning must have shape (n_nodes,)")
        if self.coupling.shape != (n, n):
            raise InvalidArgumentError("coupling must have shape (n_nodes, n_nodes)")
        if not np.allclose(self.coupling, self.coupling.T, atol=1e-12):
            raise InvalidArgumentError("coupling must be symmetric")
        if np.any(np.abs(np.diag(self.coupling)) > 0):
            raise InvalidArgumentError("coupling diagonal must be zero")
        if self.source_decay <= 0:
            raise InvalidArgumentError("source_decay must be positive")
        if self.input_weights.shape != (n,) or np.any(self.input_weights < 0) \
                or np.any(self.input_weights > 1):
            raise InvalidArgumentError("input_weights must lie in [0, 1]")
        if abs(self.eta - float(np.sum(self.input_weights ** 2))) > 1e-12:
            raise InvalidArgumentError("eta must equal the sum of squared input weights")
        if not (0 < self.dt <= 0.05):
            raise InvalidArgumentError("dt must satisfy 0 < dt <= 0.05")
        t_on, t_off = self.injection_window
        if not (t_on < t_off <= self.t_final):
            raise InvalidArgumentError("injection window must satisfy t_on < t_off <= t_final")
        if self.n_trajectories < 1:
            raise InvalidArgumentError("n_trajectories must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def linear_coefficient(self) -> np.ndarray:
        """A_i = i Delta_i - gamma_i / 2 per node."""
        return 1j * self.detuning - 0.5 * self.decay

    def effective_linear_coefficient(self) -> np.ndarray:
        """A_i plus the noise-induced drift correction used by the integrator.

        The trajectory equations carry multiplicative noise sqrt(-iU) alpha xi;
        interpreting them in the Ito sense and integrating with a midpoint
        scheme (which converges to the Stratonovich solution) requires
        subtracting the spurious drift (-iU/2) alpha, i.e. adding +iU/2.
        """
        a = self.linear_coefficient()
        if self.stratonovich_correction:
            a = a + 0.5j * self.kerr
        return a


@dataclass
class TrajectoryState:
    """Phase-space state of a single trajectory at one instant."""

    alpha: np.ndarray          # (N,) complex
    alpha_tilde: np.ndarray    # (N,) complex
    source: complex
    source_tilde: complex
    time: float

    def occupation_terms(self) -> np.ndarray:
        return (self.alpha * np.conj(self.alpha_tilde)).real

    def is_diverged(self) -> bool:
        return bool(np.any(np.abs(self.alpha) > DIVERGENCE_LIMIT)
                    or np.any(np.abs(self.alpha_tilde) > DIVERGENCE_LIMIT)
                    or not np.all(np.isfinite(self.alpha))
                    or not np.all(np.isfinite(self.alpha_tilde)))


@dataclass(frozen=True)
class ResponseRecord:
    """Per-node mean occupations with standard errors over an ensemble."""

    times: np.ndarray               # (T+1,)
    occupations: np.ndarray         # (N, T+1)
    standard_errors: np.ndarray     # (N, T+1)
    n_trajectories: int
    diverged_count: int
    imag_means: np.ndarray | None = None
    imag_standard_errors: np.ndarray | None = None


def lattice_edges(n_nodes: int) -> list[tuple[int, int]]:
    """Nearest-neighbour edges of the most-square 2D lattice with n_nodes sites.

    Sites fill rows of a rows x cols grid (rows = floor(sqrt(n)), cols =
    ceil(n / rows)); the last row may be partial.
    """
    rows = max(1, int(math.floor(math.sqrt(n_nodes))))
    cols = int(math.ceil(n_nodes / rows))
    edges = []
    for idx in range(n_nodes):
        r, c = divmod(idx, cols)
        right = idx + 1
        if c + 1 < cols and right < n_nodes:
            edges.append((idx, right))
        down = idx + cols
        if down < n_nodes:
            edges.append((idx, down))
    return edges


def spectral_radius(matrix: np.ndarray, tol: float = 1e-10,
                    max_iters: int = 100_000) -> float:
    """Largest eigenvalue modulus of a real symmetric matrix.

    Power iteration on matrix @ matrix (whose dominant eigenvalue is the
    squared spectral radius; squaring removes the +/- lambda ambiguity of
    bipartite couplings) with a deterministic start vector.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidArgumentError("matrix must be square")
    if not np.all(np.isfinite(m)):
        raise InvalidArgumentError("matrix entries must be finite")
    n = m.shape[0]
    v = 1.0 + np.arange(n) / max(n, 1)
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(max_iters):
        w = m @ (m @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        estimate = math.sqrt(norm)
        if abs(estimate - prev) <= tol * max(1.0, estimate):
            return estimate
        prev = estimate
    raise ConvergenceError(f"power iteration did not converge in {max_iters} iterations")


def build_reservoir(n_nodes: int, kerr: float, drive: complex = DEFAULT_DRIVE,
                    n_trajectories: int = DEFAULT_TRAJECTORIES, seed: int = 0,
                    decay: float = 1.0, source_decay: float = 1.0,
                    dt: float = DEFAULT_DT, t_final: float = DEFAULT_T_FINAL,
                    injection_window: tuple[float, float] = DEFAULT_WINDOW,
                    stratonovich_correction: bool = True) -> ReservoirConfig:
    """Draw one random reservoir realization.

    Couplings are uniform(-1, 1) on nearest-neighbour lattice links,
    symmetrized and normalized by their spectral radius; detunings are
    uniform(0, 0.1*gamma); input weights uniform(0, 1).
    """
    if n_nodes < 1:
        raise InvalidArgumentError("n_nodes must be >= 1")
    rng = seeding.generator(seed, seeding.STREAM_RESERVOIR)
    coupling = np.zeros((n_nodes, n_nodes))
    for i, j in lattice_edges(n_nodes):
        coupling[i, j] = coupling[j, i] = rng.uniform(-1.0, 1.0)
    radius = spectral_radius(coupling)
    degenerate = radius == 0.0
    if not degenerate:
        coupling = coupling / radius
    detuning = rng.uniform(0.0, 0.1 * decay, size=n_nodes)
    weights = rng.uniform(0.0, 1.0, size=n_nodes)
    return ReservoirConfig(
        n_nodes=n_nodes,
        kerr=float(kerr),
        decay=np.full(n_nodes, float(decay)),
        detuning=detuning,
        coupling=coupling,
        drive=complex(drive),
        source_decay=float(source_decay),
        input_weights=weights,
        eta=float(np.sum(weights ** 2)),
        injection_window=(float(injection_window[0]), float(injection_window[1])),
        dt=float(dt),
        t_final=float(t_final),
        n_trajectories=int(n_trajectories),
        master_seed=int(seed),
        stratonovich_correction=stratonovich_correction,
        degenerate_coupling=degenerate,
    )


def injection_envelope(config: ReservoirConfig, t: float) -> float:
    t_on, t_off = config.injection_window
    return 1.0 if (t_on <= t < t_off) else 0.0


def drift(state: TrajectoryState, config: ReservoirConfig, t: float) -> TrajectoryState:
    """Deterministic part of the trajectory equations (no noise correction).

    d alpha_i = A_i alpha_i - iU alpha_i^2 conj(atilde_i) - iF
                + i sum_k J_ik alpha_k - sqrt(gamma_s gamma_i f) W_i s,
    with the twin line under alpha <-> atilde, s <-> stilde, and the source
    pair decaying at f * gamma_s * eta / 2.
    """
    a_lin = config.linear_coefficient()
    f = injection_envelope(config, t)
    w_eff = np.sqrt(config.source_decay * config.decay) * config.input_weights
    u = config.kerr
    alpha, atilde = state.alpha, state.alpha_tilde
    d_alpha = (a_lin * alpha - 1j * u * alpha ** 2 * np.conj(atilde)
               - 1j * config.drive + 1j * (config.coupling @ alpha)
               - f * w_eff * state.source)
    d_atilde = (a_lin * atilde - 1j * u * atilde ** 2 * np.conj(alpha)
                - 1j * config.drive + 1j * (config.coupling @ atilde)
                - f * w_eff * state.source_tilde)
    rate = f * config.source_decay * config.eta / 2.0
    return TrajectoryState(alpha=d_alpha, alpha_tilde=d_atilde,
                           source=-rate * state.source,
                           source_tilde=-rate * state.source_tilde,
                           time=t)


def step_midpoint(state: TrajectoryState, config: ReservoirConfig, t: float,
                  noise_draws: np.ndarray) -> TrajectoryState:
    """One semi-implicit midpoint step of size dt from time t.

    noise_draws holds 2N standard normals already scaled by 1/sqrt(dt)
    (first N for the alpha line, last N for the twin line).  The midpoint is
    solved by a fixed number of Jacobi fixed-point iterations; drift and
    multiplicative noise are both evaluated at the midpoint, with the
    noise-induced drift correction folded into the linear coefficient.
    """
    n = config.n_nodes
    noise_draws = np.asarray(noise_draws, dtype=float)
    if noise_draws.shape != (2 * n,):
        raise InvalidArgumentError(f"noise_draws must have shape ({2 * n},)")
    dt = config.dt
    half = 0.5 * dt
    t_mid = t + 0.5 * dt
    f = injection_envelope(config, t_mid)
    a_eff = config.effective_linear_coefficient()
    w_eff = np.sqrt(config.source_decay * config.decay) * config.input_weights
    u = config.kerr
    noise_coef = math.sqrt(u) * complex(math.sqrt(0.5), -math.sqrt(0.5))
    rate = f * config.source_decay * config.eta / 2.0

    zb, ztb = state.alpha.copy(), state.alpha_tilde.copy()
    sb, stb = state.source, state.source_tilde
    for _ in range(MIDPOINT_ITERATIONS):
        d_z = (a_eff * zb - 1j * u * zb ** 2 * np.conj(ztb) - 1j * config.drive
               + 1j * (config.coupling @ zb) - f * w_eff * sb
               + noise_coef * zb * noise_draws[:n])
        d_zt = (a_eff * ztb - 1j * u * ztb ** 2 * np.conj(zb) - 1j * config.drive
                + 1j * (config.coupling @ ztb) - f * w_eff * stb
                + noise_coef * ztb * noise_draws[n:])
        sb_next = state.source + half * (-rate * sb)
        stb_next = state.source_tilde + half * (-rate * stb)
        zb, ztb = state.alpha + half * d_z, state.alpha_tilde + half * d_zt
        sb, stb = sb_next, stb_next
    return TrajectoryState(
        alpha=2.0 * zb - state.alpha,
        alpha_tilde=2.0 * ztb - state.alpha_tilde,
        source=2.0 * sb - state.source,
        source_tilde=2.0 * stb - state.source_tilde,
        time=t + dt,
    )


def analytic_linear_occupation(detuning: float, decay: float, drive: complex) -> float:
    """Steady-state occupation of a single linear driven-damped mode."""
    if decay <= 0:
        raise InvalidArgumentError("decay must be positive")
    return abs(drive) ** 2 / (detuning ** 2 + decay ** 2 / 4.0)


def _block_ranges(total: int, block: int = TRAJECTORY_BLOCK):
    for start in range(0, total, block):
        yield start, min(start + block, total)


def set_worker_threads(threads: int):
    """Cap the trajectory-kernel worker count.

    Trajectories write disjoint output slots, so the result is bitwise
    independent of this setting; requests beyond the host limit are clamped.
    """
    import numba

    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(max(1, min(int(threads), limit)))


def simulate_ensemble(config: ReservoirConfig, input_state: StateSpec | None = None,
                      threads: int = 1) -> ResponseRecord:
    """Estimate node-occupation time series over an ensemble of trajectories.

    Nodes start in vacuum; the source pair is drawn from the input state's
    sampler (one pair per trajectory) or set to zero for a reference run.
    Noise and source streams are keyed by (master_seed, stream, block) only,
    so a run with a vacuum-equivalent input is bitwise identical to the
    reference and common random numbers cancel across perturbed/reference
    pairs.  Trajectories exceeding the divergence limit are excluded.
    """
    n = config.n_nodes
    n_steps = config.n_steps
    n_traj = config.n_trajectories
    a_eff = config.effective_linear_coefficient()
    w_eff = np.sqrt(config.source_decay * config.decay) * config.input_weights
    source_rate = config.source_decay * config.eta / 2.0
    t_on, t_off = config.injection_window
    has_noise = config.kerr > 0.0

    occ_re = np.zeros((n_traj, n_steps + 1, n))
    occ_im = np.zeros((n_traj, n_steps + 1, n))
    diverged = np.zeros(n_traj, dtype=np.bool_)

    # Noise and source draws are generated per fixed-size block with
    # block-indexed streams, so the partition never depends on thread count.
    noise = np.zeros((n_traj, n_steps if has_noise else 1, 2, n))
    s0 = np.zeros(n_traj, dtype=np.complex128)
    st0 = np.zeros(n_traj, dtype=np.complex128)
    for block_index, (start, stop) in enumerate(_block_ranges(n_traj)):
        size = stop - start
        if has_noise:
            noise_rng = seeding.generator(config.master_seed, seeding.STREAM_NOISE,
                                          block_index)
            noise[start:stop] = noise_rng.standard_normal((size, n_steps, 2, n))
        if input_state is not None:
            source_rng = seeding.generator(config.master_seed, seeding.STREAM_SOURCE,
                                           block_index)
            s0[start:stop], st0[start:stop] = sample_pairs(input_state, size, source_rng)

    alpha0 = np.zeros((n_traj, n), dtype=np.complex128)
    atilde0 = np.zeros((n_traj, n), dtype=np.complex128)
    set_worker_threads(threads)
    integrate_batch(alpha0, atilde0, s0, st0, config.coupling, a_eff,
                    float(config.kerr), complex(config.drive), w_eff,
                    source_rate, t_on, t_off, config.dt, n_steps,
                    MIDPOINT_ITERATIONS, noise, occ_re, occ_im, diverged)

    diverged_count = int(diverged.sum())
    if diverged_count / n_traj >= MAX_DIVERGED_FRACTION:
        raise DivergenceError(
            f"{diverged_count}/{n_traj} trajectories diverged; "
            "reduce dt or the Kerr strength")
    alive = ~diverged
    n_alive = int(alive.sum())
    kept_re = occ_re[alive]
    kept_im = occ_im[alive]
    mean_re = kept_re.mean(axis=0)
    mean_im = kept_im.mean(axis=0)
    if n_alive > 1:
        var_re = np.sum((kept_re - mean_re) ** 2, axis=0) / (n_alive - 1)
        var_im = np.sum((kept_im - mean_im) ** 2, axis=0) / (n_alive - 1)
        se_re = np.sqrt(np.maximum(var_re, 0.0) / n_alive)
        se_im = np.sqrt(np.maximum(var_im, 0.0) / n_alive)
    else:
        se_re = np.zeros_like(mean_re)
        se_im = np.zeros_like(mean_im)
    return ResponseRecord(
        times=config.times,
        occupations=mean_re.T.copy(),
        standard_errors=se_re.T.copy(),
        n_trajectories=n_alive,
        diverged_count=diverged_count,
        imag_means=mean_im.T.copy(),
        imag_standard_errors=se_im.T.copy(),
    )
