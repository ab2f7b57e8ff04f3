"""Fock-basis reference checked against independent closed forms."""

import math

import numpy as np
import pytest

from qrc_sensor import fock
from qrc_sensor.errors import TruncationError
from qrc_sensor.states import StateKind, StateSpec


def coherent(mag, phase=0.0):
    return StateSpec(StateKind.COHERENT, amplitude_mag=mag, amplitude_phase=phase)


def squeezed(r, theta=0.0):
    return StateSpec(StateKind.SQUEEZED_VACUUM, squeeze_mag=r, squeeze_phase=theta)


def cat(mag, phase=0.0, cat_phase=0.0):
    return StateSpec(StateKind.CAT, amplitude_mag=mag, amplitude_phase=phase,
                     cat_phase=cat_phase)


# closed-form Wigner functions used as independent oracles -------------------

def wigner_coherent_exact(x, p, beta):
    x0 = math.sqrt(2) * beta.real
    p0 = math.sqrt(2) * beta.imag
    return np.exp(-(x - x0) ** 2 - (p - p0) ** 2) / math.pi


def wigner_squeezed_exact(x, p, r, theta):
    u = x * math.cos(theta) + p * math.sin(theta)
    v = -x * math.sin(theta) + p * math.cos(theta)
    return np.exp(-math.exp(2 * r) * u ** 2 - math.exp(-2 * r) * v ** 2) / math.pi


def wigner_even_cat_exact(x, p, mag):
    plus = wigner_coherent_exact(x, p, complex(mag, 0))
    minus = wigner_coherent_exact(x, p, complex(-mag, 0))
    cross = (2 / math.pi) * np.exp(-x ** 2 - p ** 2) * np.cos(2 * math.sqrt(2) * mag * p)
    return (plus + minus + cross) / (2 * (1 + math.exp(-2 * mag ** 2)))


class TestFockVector:
    def test_vacuum(self):
        vec = fock.fock_vector(coherent(0.0), 12)
        assert vec.amplitudes[0] == pytest.approx(1.0)
        assert np.allclose(vec.amplitudes[1:], 0.0)

    def test_coherent_mean_photon(self):
        assert fock.mean_photon(coherent(2.0), 60) == pytest.approx(4.0, abs=1e-9)

    def test_squeezed_parity(self):
        vec = fock.fock_vector(squeezed(1.0), 40)
        assert np.allclose(vec.amplitudes[1::2], 0.0)

    def test_squeezed_mean_photon_closed_form(self):
        # cutoff 80: the n-weighted tail of the r=1 expansion is < 1e-8
        assert fock.mean_photon(squeezed(1.0), 80) == pytest.approx(
            math.sinh(1.0) ** 2, abs=1e-6)

    def test_cat_parity_and_mean(self):
        vec = fock.fock_vector(cat(1.2), 40)
        assert np.allclose(vec.amplitudes[1::2], 0.0)
        expected = 1.2 ** 2 * math.tanh(1.2 ** 2)
        assert fock.mean_photon(cat(1.2), 40) == pytest.approx(expected, abs=1e-6)

    def test_general_cat_phase_mean(self):
        # <n> = |b|^2 (1 - e^{-2 b^2} cos t) / (1 + e^{-2 b^2} cos t)
        mag, phase = 1.25, math.pi / 3
        b2 = mag ** 2
        ov = math.exp(-2 * b2) * math.cos(phase)
        expected = b2 * (1 - ov) / (1 + ov)
        assert fock.mean_photon(cat(mag, cat_phase=phase), 40) == pytest.approx(
            expected, abs=1e-6)

    def test_truncation_error_carries_hint(self):
        with pytest.raises(TruncationError) as err:
            fock.fock_vector(coherent(4.0), 8)
        assert err.value.required_cutoff >= 16


class TestWignerGrid:
    def test_vacuum_peak_on_grid_origin(self):
        grid = fock.wigner_grid(coherent(0.0), size=64, extent=5.0)
        assert grid.values[32, 32] == pytest.approx(1 / math.pi, abs=1e-6)
        assert grid.integral() == pytest.approx(1.0, abs=1e-6)

    def test_coherent_matches_displaced_vacuum_closed_form(self):
        beta = 1.0 + 0.0j
        grid = fock.wigner_grid(coherent(1.0), size=64, extent=5.0)
        x, p = np.meshgrid(grid.axis, grid.axis)
        assert np.max(np.abs(grid.values - wigner_coherent_exact(x, p, beta))) < 1e-6

    def test_coherent_equals_shifted_vacuum_grid(self):
        # displacement by one grid step: beta = step / sqrt(2) shifts x by one cell
        size, extent = 64, 5.0
        step = 2 * extent / size
        beta = step / math.sqrt(2)
        vac = fock.wigner_grid(coherent(0.0), size=size, extent=extent)
        coh = fock.wigner_grid(coherent(beta), size=size, extent=extent)
        assert np.max(np.abs(coh.values[:, 1:] - vac.values[:, :-1])) < 1e-6

    def test_squeezed_matches_closed_form(self):
        grid = fock.wigner_grid(squeezed(1.0, 0.4), size=64, extent=5.0, cutoff=120)
        x, p = np.meshgrid(grid.axis, grid.axis)
        assert np.max(np.abs(grid.values - wigner_squeezed_exact(x, p, 1.0, 0.4))) < 1e-6

    def test_even_cat_matches_closed_form(self):
        grid = fock.wigner_grid(cat(1.25), size=64, extent=5.0, cutoff=60)
        x, p = np.meshgrid(grid.axis, grid.axis)
        assert np.max(np.abs(grid.values - wigner_even_cat_exact(x, p, 1.25))) < 1e-6

    def test_cat_has_negative_fringes(self):
        grid = fock.wigner_grid(cat(1.25), size=64, extent=5.0)
        assert grid.values.min() < 0

    def test_squeezed_nonnegative_at_converged_cutoff(self):
        grid = fock.wigner_grid(squeezed(1.1, 0.3), size=64, extent=5.0, cutoff=200)
        assert grid.values.min() >= -1e-9

    def test_cat_momentum_mirror_symmetry(self):
        grid = fock.wigner_grid(cat(1.25), size=64, extent=5.0)
        # row k holds p = -extent + k*step, so rows 1..M-1 mirror onto M-k
        mirrored = grid.values[1:, :][::-1, :]
        assert np.max(np.abs(grid.values[1:, :] - mirrored)) < 1e-9

    @pytest.mark.parametrize("spec", [
        coherent(1.03, 0.5), coherent(1.34, 1.2),
        squeezed(0.9, 0.2), squeezed(1.0, 1.0),
        cat(1.12, 0.3), cat(1.38, 1.5),
    ])
    def test_normalization_for_dataset_states(self, spec):
        grid = fock.wigner_grid(spec, size=64, extent=5.0)
        assert grid.integral() == pytest.approx(1.0, abs=0.01)

    def test_wide_squeezed_matches_in_window_mass(self):
        # at r = 1.1 the anti-squeezed tail genuinely leaves the window;
        # the grid integral must equal the analytic in-window mass
        grid = fock.wigner_grid(squeezed(1.1, 0.0), size=64, extent=5.0, cutoff=120)
        sigma_p = math.exp(1.1) / math.sqrt(2)
        mass = math.erf(5.0 / (math.sqrt(2) * sigma_p))
        assert grid.integral() == pytest.approx(mass, abs=5e-3)

    def test_mean_photon_consistency(self):
        spec = cat(1.25)
        grid = fock.wigner_grid(spec, size=128, extent=6.0)
        x, p = np.meshgrid(grid.axis, grid.axis)
        moment = float(np.sum((x ** 2 + p ** 2) / 2 * grid.values) * grid.cell_area)
        assert moment - 0.5 == pytest.approx(fock.mean_photon(spec), abs=0.02)
