import math

import numpy as np
import pytest

from zeeman_qgt import (
    ConvergenceError,
    IntegrationDomain,
    MassiveDirac,
    OccupationSpec,
    Prefactors,
    alpha_tensor,
    decompose_pm,
    linear_dirac,
    response_spectrum,
    scaling_fit,
    sigma_tensor,
    weighted_sector_integrals,
)
from zeeman_qgt.errors import FitError
from zeeman_qgt.response import (
    ALPHA_CHANNEL_OF,
    CHANNELS,
    SIGMA_CHANNEL_OF,
    alpha_terms,
    channels_from_terms,
    frequency_sweep,
    kme_sector_integrals,
    sigma_terms,
)

DIRAC = MassiveDirac(1.0)
LAMBDA = 20.0


def omega_a_gyro_exact(m, cutoff):
    return (1 - abs(m) / math.hypot(cutoff, m)) / (4 * math.pi)


def omega_a_kme_exact(m, cutoff):
    return (1 - abs(m) ** 3 / math.hypot(cutoff, m) ** 3) / (96 * math.pi * m * m)


def test_occupation():
    occ = OccupationSpec(mu=0.0)
    assert np.array_equal(occ.f([-1.0, 0.0, 1.0]), [1.0, 0.5, 0.0])
    warm = OccupationSpec(mu=0.0, T=0.1)
    assert warm.f(0.0) == 0.5 and warm.f(-5.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        OccupationSpec(T=-1.0)


def test_domain_defaults():
    d = IntegrationDomain().resolve(MassiveDirac(3.0))
    assert d.cutoff == 60.0 and d.doubled().cutoff == 120.0
    kx, ky, w = IntegrationDomain(cutoff=2.0, nr=64, ntheta=32).rule()
    # area of the disk over (2 pi)^2
    assert w.sum() == pytest.approx(4 * math.pi / (2 * math.pi) ** 2, rel=1e-12)
    with pytest.raises(ValueError):
        IntegrationDomain(cutoff=-1.0)


def test_gyrotropic_sector_integral_oracle():
    w = weighted_sector_integrals(DIRAC)
    assert w["OmegaA"][2] == pytest.approx(omega_a_gyro_exact(1.0, LAMBDA), rel=1e-12)
    assert np.abs(w["OmegaN"]).max() < 1e-15


def test_kme_sector_integral_oracle():
    w = kme_sector_integrals(DIRAC)
    assert w["OmegaA"][2] == pytest.approx(omega_a_kme_exact(1.0, LAMBDA), rel=1e-12)


def test_dual_route_agreement():
    # the sigma/alpha terms use the matrix-element path; the sector integrals use closed forms
    omega = 1e-3
    w, k = weighted_sector_integrals(DIRAC), kme_sector_integrals(DIRAC)
    s_minus, _ = decompose_pm(sigma_tensor(DIRAC, omega=omega))
    a_minus, _ = decompose_pm(alpha_tensor(DIRAC, omega=omega))
    assert s_minus.imag == pytest.approx(omega * w["OmegaA"][2], rel=1e-12)
    assert a_minus.real == pytest.approx(omega**2 * k["OmegaA"][2], rel=1e-12)
    # diagonal gA part of Re sigma
    assert sigma_tensor(DIRAC, omega=omega)[0, 0].real == pytest.approx(2 * omega**2 * w["gA"][0, 0], rel=1e-12)


def test_zero_frequency_is_exactly_zero():
    assert np.array_equal(sigma_tensor(DIRAC, omega=0.0), np.zeros((3, 3), complex))
    assert np.array_equal(alpha_tensor(DIRAC, omega=0.0), np.zeros((3, 3), complex))


def test_prefactors_scale_linearly():
    a = sigma_tensor(DIRAC, omega=1e-3)
    b = sigma_tensor(DIRAC, omega=1e-3, prefactors=Prefactors(g_muB=2.0, charge=-1.5))
    assert np.allclose(b, -3.0 * a, rtol=1e-14, atol=0)


def test_pauli_blocked_response_vanishes():
    # chemical potential above the integration window: both bands filled
    s = sigma_tensor(DIRAC, OccupationSpec(mu=1e3), IntegrationDomain(cutoff=5.0, nr=64, ntheta=32), omega=1e-3)
    assert np.abs(s).max() < 1e-16


def test_sector_ablation_anisotropic():
    model = linear_dirac([[1.0, 0.4], [-0.3, 0.7]], 0.5)
    dom = IntegrationDomain(cutoff=10.0, nr=96, ntheta=64)
    occ, om = OccupationSpec(), [1e-3, 3e-3]
    base = channels_from_terms(sigma_terms(model, occ, dom, om), alpha_terms(model, occ, dom, om))
    for sector in ("gN", "gA", "OmegaN", "OmegaA"):
        abl = channels_from_terms(
            sigma_terms(model, occ, dom, om, zero_sectors=(sector,)),
            alpha_terms(model, occ, dom, om, zero_sectors=(sector,)),
        )
        changed = {c for c in CHANNELS if not np.array_equal(base[c], abl[c])}
        assert changed == {SIGMA_CHANNEL_OF[sector], ALPHA_CHANNEL_OF[sector]}
        for c in changed:
            assert np.all(abl[c] == 0) or np.abs(abl[c]).max() < np.abs(base[c]).max()


def test_spectrum_fits_for_isotropic_dirac():
    spec = response_spectrum(DIRAC, omegas=frequency_sweep(1e-4, 1e-3, 8))
    fits = {f.channel: f for f in spec.fits}
    assert fits["Im_sigma_minus"].exponent == pytest.approx(1.0, abs=1e-6)
    assert fits["Re_alpha_minus"].exponent == pytest.approx(2.0, abs=1e-6)
    assert fits["Im_sigma_minus"].r_squared >= 0.9999
    # no in-plane curl of d-hat for an isotropic cone
    assert fits["Re_sigma_minus"].suppressed and fits["Im_alpha_minus"].suppressed
    assert spec.convergence["sigma_delta"] < 0.05


def test_all_channels_scale_for_anisotropic_cone():
    model = linear_dirac([[1.0, 0.4], [-0.3, 0.7]], 0.5)
    spec = response_spectrum(
        model, domain=IntegrationDomain(cutoff=20.0, nr=160, ntheta=96),
        omegas=frequency_sweep(1e-4, 1e-3, 8), check_convergence=False,
    )
    for f in spec.fits:
        assert not f.suppressed, f.channel
        assert f.exponent == pytest.approx(f.expected_exponent, abs=0.05), f.channel
        assert f.r_squared >= 0.9999


def test_convergence_error_reports_both_cutoffs():
    with pytest.raises(ConvergenceError) as info:
        response_spectrum(DIRAC, domain=IntegrationDomain(cutoff=1.0), omegas=[1e-3])
    assert info.value.cutoffs == (1.0, 2.0)
    assert info.value.value is not None and info.value.value_doubled is not None


def test_cutoff_doubling_tail():
    # relative change of <OmegaA> under cutoff doubling is ~ m / (2 Lambda)
    big = 1e6
    a = weighted_sector_integrals(DIRAC, domain=IntegrationDomain(cutoff=big))["OmegaA"][2]
    b = weighted_sector_integrals(DIRAC, domain=IntegrationDomain(cutoff=2 * big))["OmegaA"][2]
    assert abs(b - a) / abs(b) < 1e-6


def test_scaling_fit_preconditions():
    spec = response_spectrum(DIRAC, omegas=[1e-4, 2e-4, 3e-4], check_convergence=False)
    assert spec.fits == []
    with pytest.raises(FitError):
        scaling_fit(spec, "Im_sigma_minus")
    with pytest.raises(FitError):
        scaling_fit(spec, "nonsense")


def test_worker_count_does_not_change_bits():
    dom = IntegrationDomain(nr=96, ntheta=64)
    a = response_spectrum(DIRAC, domain=dom, omegas=[1e-3], workers=1)
    b = response_spectrum(DIRAC, domain=dom, omegas=[1e-3], workers=8)
    assert np.array_equal(a.sigma, b.sigma) and np.array_equal(a.alpha, b.alpha)
