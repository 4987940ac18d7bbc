import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aerialnet import linkbudget as lb
from aerialnet.errors import DomainError, GridSizeError

from oracles import bisect_radius, fspl_friis

F = 795.5e6

# frozen from oracles.fspl_friis and 10*log10(k*T*B)+30 evaluated independently
FSPL_300 = 80.00279348424198
FSPL_1000 = 90.46036838984872
NOISE_1HZ = -173.92826818800953
NOISE_10MHZ = -103.9282681880095
NADIR_SNR = 45.92547470376752


@pytest.mark.parametrize("d, expected", [(300.0, FSPL_300), (1000.0, FSPL_1000)])
def test_fspl_matches_friis(d, expected):
    assert lb.free_space_path_loss_db(d, F) == pytest.approx(expected, abs=1e-9)
    assert fspl_friis(d, F) == pytest.approx(expected, abs=1e-9)
    assert round(lb.free_space_path_loss_db(d, F), 2) == round(expected, 2)


def test_fspl_distance_doubling():
    d = lb.free_space_path_loss_db(600.0, F) - lb.free_space_path_loss_db(300.0, F)
    assert d == pytest.approx(20 * math.log10(2), abs=1e-9)
    assert round(lb.free_space_path_loss_db(600.0, F), 2) == 86.02


def test_fspl_vectorised():
    d = np.array([300.0, 1000.0])
    np.testing.assert_allclose(lb.free_space_path_loss_db(d, F), [FSPL_300, FSPL_1000], atol=1e-9)


@pytest.mark.parametrize("d, f", [(0.0, F), (-1.0, F), (300.0, 0.0), (300.0, -5.0),
                                  (math.nan, F)])
def test_fspl_domain(d, f):
    with pytest.raises(DomainError):
        lb.free_space_path_loss_db(d, f)


def test_thermal_noise():
    assert lb.thermal_noise_dbm(1.0, 293.15) == pytest.approx(NOISE_1HZ, abs=1e-9)
    assert lb.thermal_noise_dbm(10e6, 293.15) == pytest.approx(NOISE_10MHZ, abs=1e-9)
    assert round(lb.thermal_noise_dbm(1.0, 293.15), 2) == -173.93
    diff = lb.thermal_noise_dbm(2e6) - lb.thermal_noise_dbm(1e6)
    assert diff == pytest.approx(10 * math.log10(2), abs=1e-9)


@pytest.mark.parametrize("bw, t", [(0.0, 293.15), (1e6, 0.0), (-1.0, 290.0)])
def test_thermal_noise_domain(bw, t):
    with pytest.raises(DomainError):
        lb.thermal_noise_dbm(bw, t)


def test_received_power_example(default_params):
    expected = 30 + 3 - FSPL_300 + 0 - 4
    assert lb.received_power_dbm(default_params, 300.0) == pytest.approx(expected, abs=1e-9)
    assert round(lb.received_power_dbm(default_params, 300.0), 2) == -51.00


def test_received_power_identity():
    p = lb.LinkBudgetParams(tx_antenna_gain_dbi=0.0, fading_margin_db=0.0)
    wavelength = 2.998e8 / p.carrier_freq_hz
    d0 = wavelength / (4 * math.pi)  # free-space loss is exactly 0 dB here
    assert lb.received_power_dbm(p, d0) == pytest.approx(p.tx_power_dbm, abs=1e-9)


def test_received_power_linear_in_gain(default_params):
    base = lb.received_power_dbm(default_params, 750.0)
    bumped = lb.received_power_dbm(replace(default_params, tx_antenna_gain_dbi=4.0), 750.0)
    assert bumped - base == pytest.approx(1.0, abs=1e-9)


def test_snr_example(default_params):
    assert lb.snr_db(default_params, 300.0) == pytest.approx(NADIR_SNR, abs=1e-9)
    assert lb.snr_db(default_params, 300.0) == pytest.approx(45.93, abs=0.01)


def test_snr_db_identities(default_params):
    d = 1234.5
    s = lb.snr_db(default_params, d)
    assert lb.snr_db(replace(default_params, ue_noise_figure_db=8.0), d) - s == pytest.approx(-1, abs=1e-9)
    assert lb.snr_db(replace(default_params, bandwidth_hz=40e6), d) - s == pytest.approx(
        -20 * math.log10(2), abs=1e-9)


def test_snr_equals_recomposition(default_params):
    for d in (1.0, 300.0, 5000.0, 123456.0):
        recomposed = (lb.received_power_dbm(default_params, d)
                      - lb.thermal_noise_dbm(default_params.bandwidth_hz, default_params.temperature_k)
                      - default_params.ue_noise_figure_db)
        assert lb.snr_db(default_params, d) == recomposed


@given(st.floats(1.0, 1e6), st.floats(1e-3, 1e3))
def test_snr_strictly_decreasing(d, step):
    p = lb.LinkBudgetParams()
    assert lb.snr_db(p, d + step) < lb.snr_db(p, d)


@pytest.mark.parametrize("kwargs", [
    {"carrier_freq_hz": 0.0}, {"bandwidth_hz": -1.0}, {"temperature_k": 0.0},
    {"fading_margin_db": -1.0}, {"ue_noise_figure_db": -0.5}, {"tx_power_dbm": math.inf},
])
def test_params_invariants(kwargs):
    with pytest.raises(DomainError):
        lb.LinkBudgetParams(**kwargs)


def test_platform_altitude_range():
    with pytest.raises(DomainError):
        lb.AerialPlatform((0, 0), 0.0)
    with pytest.warns(UserWarning):
        lb.AerialPlatform((0, 0), 100.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        lb.AerialPlatform((0, 0), 4000.0)


def test_grid_nadir_and_symmetry(default_params, platform300):
    g = lb.snr_grid(platform300, default_params, 2000.0, 100.0)
    assert (g.nx, g.ny) == (41, 41)
    c = 20
    assert g.values[c, c] == pytest.approx(lb.snr_db(default_params, 300.0), abs=1e-9)
    assert g.values[c, c] == pytest.approx(NADIR_SNR, abs=1e-9)
    assert g.values[c + 3, c + 4] == g.values[c - 4, c + 3] == g.values[c - 3, c - 4]
    np.testing.assert_array_equal(g.values, g.values.T)
    np.testing.assert_array_equal(g.values, g.values[::-1, ::-1])


def test_grid_matches_pointwise(default_params):
    plat = lb.AerialPlatform((120.0, -40.0), 500.0)
    g = lb.snr_grid(plat, default_params, 1000.0, 250.0)
    for j, y in enumerate(g.y):
        for i, x in enumerate(g.x):
            d = math.sqrt(500.0 ** 2 + (x - 120.0) ** 2 + (y + 40.0) ** 2)
            assert g.values[j, i] == pytest.approx(lb.snr_db(default_params, d), abs=1e-9)


def test_grid_independent_of_workers(default_params, platform300):
    a = lb.snr_grid(platform300, default_params, 3000.0, 30.0, workers=1)
    b = lb.snr_grid(platform300, default_params, 3000.0, 30.0, workers=4)
    np.testing.assert_array_equal(a.values, b.values)


def test_grid_size_cap(default_params, platform300):
    with pytest.raises(GridSizeError):
        lb.snr_grid(platform300, default_params, 1000.0, 1.0, max_cells=10_000)


def test_grid_validation():
    with pytest.raises(DomainError):
        lb.SnrGrid((0, 0), 1.0, 2, 2, [1.0, 2.0, math.nan, 3.0])
    with pytest.raises(DomainError):
        lb.SnrGrid((0, 0), 0.0, 1, 1, [1.0])


def test_grid_export_format(default_params, platform300):
    g = lb.snr_grid(platform300, default_params, 100.0, 100.0)
    text = g.to_text({"tx_power_dbm": 30.0})
    lines = text.splitlines()
    assert lines[0] == "# tx_power_dbm=30.0"
    assert lines[1] == "x_m,y_m,snr_db"
    assert len(lines) == 2 + 9
    assert lines[2].startswith("-100.000000,-100.000000,")
    assert lines[2 + 4] == f"0.000000,0.000000,{NADIR_SNR:.6f}"


def test_contour_radius_example(default_params, platform300):
    r = lb.contour_radius_m(platform300, default_params, 20.0)
    ref = bisect_radius(lambda d: lb.snr_db(default_params, d), 300.0, 20.0)
    assert r == pytest.approx(ref, rel=1e-9)
    assert r == pytest.approx(5927.06090267, abs=1e-4)


def test_contour_radius_boundaries(default_params, platform300):
    nadir = lb.snr_db(default_params, 300.0)
    assert lb.contour_radius_m(platform300, default_params, nadir) == 0.0
    assert lb.contour_radius_m(platform300, default_params, nadir + 1e-9) is None


@settings(max_examples=200)
@given(st.floats(-40.0, 45.9), st.floats(300.0, 4000.0))
def test_contour_roundtrip(target, h):
    p = lb.LinkBudgetParams()
    plat = lb.AerialPlatform((0, 0), h)
    r = lb.contour_radius_m(plat, p, target)
    if r is None:
        assert target > lb.snr_db(p, h)
    else:
        assert lb.snr_db(p, math.sqrt(h * h + r * r)) == pytest.approx(target, abs=1e-9)
