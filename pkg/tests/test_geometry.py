import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_k
from zeeman_qgt import (
    MassiveDirac,
    PlanarWinding,
    band_pair_elements,
    closed_form_sectors,
    conventional_qgt,
    decompose,
    linear_dirac,
    zeeman_qgt,
)
from zeeman_qgt.geometry import (
    SECTORS,
    berry_curvature_xy,
    berry_curvature_xy_arrays,
    closed_form_arrays,
    flipped_omega_a,
)
from zeeman_qgt.model import eigen_batch, elements_from_spinors

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
complex_tensors = st.tuples(arrays(float, (3, 3), elements=finite), arrays(float, (3, 3), elements=finite))


def _definitional(model, kx, ky, n):
    d, jac = model.d(kx, ky), model.jacobian(kx, ky)
    eps, u = eigen_batch(d)
    _, r, sig = elements_from_spinors(eps, u, jac, n)
    return decompose(np.einsum("...a,...b->...ab", r, sig))


# frozen oracles: for d = (kx, ky, m) with E^2 = k^2 + m^2
#   OmegaA = -(kx/2, ky/2, m) / E^2,  gN_xz = -m ky / (2 E^2),  gN_yz = m kx / (2 E^2)
#   Omega_xy (upper band) = -m / (2 E^3)
KX, KY, M = 0.3, -0.7, 0.5
E2 = KX**2 + KY**2 + M**2


@pytest.mark.parametrize("n", [1, -1])
def test_massive_dirac_omega_a_oracle(n):
    s = closed_form_sectors(MassiveDirac(M), (KX, KY), n)
    assert np.allclose(s.OmegaA, [-KX / 2 / E2, -KY / 2 / E2, -M / E2], rtol=1e-13, atol=0)
    assert s.OmegaN[2] == pytest.approx(0, abs=1e-15)


def test_massive_dirac_gn_oracle():
    s = closed_form_sectors(MassiveDirac(M), (KX, KY), 1)
    assert s.gN[0, 2] == pytest.approx(-M * KY / (2 * E2), rel=1e-13)
    assert s.gN[1, 2] == pytest.approx(M * KX / (2 * E2), rel=1e-13)
    assert np.allclose(s.gN[:2, :2], 0, atol=1e-15)


def test_frozen_values_at_reference_point():
    s = closed_form_sectors(MassiveDirac(M), (KX, KY), 1)
    assert s.gA[0, 0] == pytest.approx(-0.4893105565805473, rel=1e-12)
    assert s.gA[0, 1] == pytest.approx(-0.13885840119177692, rel=1e-12)
    assert s.OmegaN[0] == pytest.approx(0.23143066865296155, rel=1e-12)
    assert s.OmegaN[1] == pytest.approx(0.09918457227984068, rel=1e-12)


def test_berry_curvature_oracles():
    assert berry_curvature_xy(MassiveDirac(1.0), (0.0, 0.0), 1) == -0.5
    assert berry_curvature_xy(MassiveDirac(M), (KX, KY), 1) == pytest.approx(-M / (2 * E2**1.5), rel=1e-13)
    assert berry_curvature_xy(MassiveDirac(M), (KX, KY), -1) == pytest.approx(M / (2 * E2**1.5), rel=1e-13)


def test_berry_curvature_matches_conventional_qgt():
    # Omega_xy = -2 Im T^{xy} for the (n, -n) pair
    e = band_pair_elements(MassiveDirac(M), (KX, KY), 1)
    q = conventional_qgt(e)
    assert q.Omega[0, 1] == pytest.approx(berry_curvature_xy(MassiveDirac(M), (KX, KY), 1), rel=1e-12)
    assert q.Omega_vec[2] == pytest.approx(q.Omega[0, 1])


def test_massless_dirac_omega_a_is_radial():
    s = closed_form_sectors(MassiveDirac(0.0), (2.0, 0.0), 1)
    assert np.allclose(s.OmegaA, [-0.25, 0, 0])


@pytest.mark.parametrize("m", [0.1, 1.0, 10.0])
@pytest.mark.parametrize("n", [1, -1])
def test_closed_form_equals_definitional(rng, m, n):
    model = MassiveDirac(m)
    kx, ky = random_k(rng, 500)
    a = _definitional(model, kx, ky, n)
    b = closed_form_arrays(model.d(kx, ky), model.jacobian(kx, ky), n)
    for name in SECTORS:
        assert np.abs(getattr(a, name) - getattr(b, name)).max() < 1e-8, name


@pytest.mark.parametrize("model", [linear_dirac([[1.0, 0.4], [-0.3, 0.7]], 0.5), PlanarWinding(2)])
def test_closed_form_equals_definitional_other_models(rng, model):
    kx, ky = random_k(rng, 300, min_norm=0.05)
    a = _definitional(model, kx, ky, 1)
    b = closed_form_arrays(model.d(kx, ky), model.jacobian(kx, ky), 1)
    for name in SECTORS:
        assert np.abs(getattr(a, name) - getattr(b, name)).max() < 1e-8, name


@given(complex_tensors)
def test_decomposition_is_complete(parts):
    T = parts[0] + 1j * parts[1]
    s = decompose(T)
    assert np.allclose(s.reconstruct(), T, atol=1e-12)
    assert np.allclose(s.gN, s.gN.T) and np.allclose(s.gA, s.gA.T)


@given(complex_tensors)
def test_conjugation_is_pair_swap(parts):
    T = parts[0] + 1j * parts[1]
    a, b = decompose(T.conj()), decompose(T).swapped()
    for name in SECTORS:
        assert np.allclose(getattr(a, name), getattr(b, name), atol=1e-12)


@settings(max_examples=50)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2))
def test_band_pair_swap(kx, ky, m):
    if kx * kx + ky * ky + m * m < 1e-4:
        return
    model = MassiveDirac(m)
    up = decompose(zeeman_qgt(band_pair_elements(model, (kx, ky), 1)))
    dn = decompose(zeeman_qgt(band_pair_elements(model, (kx, ky), -1))).swapped()
    for name in SECTORS:
        assert np.allclose(getattr(up, name), getattr(dn, name), atol=1e-10)


@settings(max_examples=50)
@given(st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi), st.floats(-3, 3), st.floats(-3, 3))
def test_gauge_invariance(p0, p1, kx, ky):
    if kx * kx + ky * ky < 1e-4:
        return
    model = MassiveDirac(0.3)
    d, jac = model.d(kx, ky), model.jacobian(kx, ky)
    eps, u = eigen_batch(d)
    rotated = u * np.exp(1j * np.array([p0, p1]))[None, :]
    for n in (1, -1):
        _, r1, s1 = elements_from_spinors(eps, u, jac, n)
        _, r2, s2 = elements_from_spinors(eps, rotated, jac, n)
        assert np.allclose(np.outer(r1, s1), np.outer(r2, s2), atol=1e-12)


def test_band_sum_rules(rng):
    model = MassiveDirac(0.5)
    kx, ky = random_k(rng, 1000)
    d, jac = model.d(kx, ky), model.jacobian(kx, ky)
    up, dn = closed_form_arrays(d, jac, 1), closed_form_arrays(d, jac, -1)
    assert np.abs(up.OmegaN + dn.OmegaN).max() <= 1e-12
    assert np.abs(up.gA + dn.gA).max() <= 1e-12
    assert np.abs(up.OmegaA - dn.OmegaA).max() <= 1e-12
    assert np.abs(up.gN - dn.gN).max() <= 1e-12


def test_hermiticity_dichotomy(rng):
    model = MassiveDirac(0.0)
    kx, ky = random_k(rng, 200, min_norm=1e-2)
    defects = []
    for x, y in zip(kx, ky):
        e = band_pair_elements(model, (x, y), 1)
        T = conventional_qgt(e).T
        assert np.abs(T - T.conj().T).max() <= 1e-12
        defects.append(zeeman_qgt(e).hermiticity_defect())
    assert np.mean(np.array(defects) > 1e-3) >= 0.99


def test_berry_curvature_arrays_vectorized():
    model = MassiveDirac(1.0)
    kx = np.linspace(-1, 1, 5)
    vals = berry_curvature_xy_arrays(model.d(kx, 0 * kx), model.jacobian(kx, 0 * kx), 1)
    assert vals.shape == (5,)
    assert vals[2] == -0.5


def test_mutation_hook_is_scoped():
    before = closed_form_sectors(MassiveDirac(M), (KX, KY), 1).OmegaA
    with flipped_omega_a():
        during = closed_form_sectors(MassiveDirac(M), (KX, KY), 1).OmegaA
    after = closed_form_sectors(MassiveDirac(M), (KX, KY), 1).OmegaA
    assert np.array_equal(during, -before)
    assert np.array_equal(after, before)
