import numpy as np
import pytest

from zeeman_qgt import (
    Custom,
    KPoint,
    MassiveDirac,
    ModelEvaluationError,
    NodeProximityError,
    PlanarWinding,
    band_pair_elements,
    constant_model,
    eigensystem,
    evaluate_d,
    linear_dirac,
    model_from_dict,
)
from zeeman_qgt.errors import ConfigError
from zeeman_qgt.model import PAULI, eigen_batch, finite_difference_jacobian, spin_expectation, velocity, velocity_perp


def test_massive_dirac_d_and_jacobian():
    d, jac = evaluate_d(MassiveDirac(0.5), (0.3, -0.7))
    assert np.allclose(d, [0.3, -0.7, 0.5])
    assert np.array_equal(jac, [[1, 0], [0, 1], [0, 0]])


@pytest.mark.parametrize("n_w", [1, 2, 3])
def test_planar_winding_jacobian_matches_finite_difference(n_w):
    model = PlanarWinding(n_w)
    kx, ky = np.array([0.4, -1.1]), np.array([0.9, 0.2])
    fd = finite_difference_jacobian(model.d, kx, ky)
    assert np.allclose(model.jacobian(kx, ky), fd, atol=1e-8)


def test_planar_winding_rejects_bad_order():
    with pytest.raises(ValueError):
        PlanarWinding(0)


def test_eigenvalues_are_plus_minus_norm():
    es = eigensystem(MassiveDirac(1.0), (0.0, 0.0))
    assert np.allclose(es.eps, [1.0, -1.0])
    # spin of the upper band is aligned with d
    assert np.allclose(spin_expectation(MassiveDirac(1.0), (0.0, 0.0), 1), [0, 0, 1])
    assert np.allclose(spin_expectation(MassiveDirac(1.0), (0.0, 0.0), -1), [0, 0, -1])


def test_eigenvectors_diagonalize(rng):
    d = rng.normal(size=(50, 3))
    eps, u = eigen_batch(d)
    H = np.einsum("...b,bij->...ij", d, PAULI)
    lhs = H @ u
    assert np.allclose(lhs, u * eps[..., None, :])
    # gauge: the dominant component is real positive
    lead = np.take_along_axis(u, np.argmax(np.abs(u), axis=-2)[..., None, :], axis=-2)
    assert np.allclose(lead.imag, 0) and np.all(lead.real > 0)


def test_node_guard():
    with pytest.raises(NodeProximityError, match=r"k=\(0.0, 0.0\)"):
        eigensystem(MassiveDirac(0.0), (0.0, 0.0))


def test_kpoint_rejects_nonfinite():
    with pytest.raises(ValueError):
        KPoint(np.nan, 0.0)


def test_position_element_oracle():
    # |r_x|^2 + |r_y|^2 for a massive Dirac cone: (k^2 + 2 m^2) / (4 E^4)
    kx, ky, m = 0.3, -0.7, 0.5
    e = band_pair_elements(MassiveDirac(m), (kx, ky), 1)
    E2 = kx**2 + ky**2 + m**2
    assert e.eps_nm == pytest.approx(2 * np.sqrt(E2))
    assert np.sum(np.abs(e.r) ** 2) == pytest.approx((kx**2 + ky**2 + 2 * m**2) / (4 * E2**2), rel=1e-12)
    assert e.r[2] == 0


def test_velocity_and_perp():
    model, k = MassiveDirac(1.0), (0.2, 0.1)
    assert np.array_equal(velocity(model, k), [[1, 0], [0, 1], [0, 0]])
    vp = velocity_perp(model, k)
    d, _ = evaluate_d(model, k)
    assert np.allclose(d @ vp, 0, atol=1e-15)
    assert vp[0, 0] == pytest.approx(1 - 0.04 / 1.05)


def test_custom_model_accepts_scalars_and_arrays():
    model = Custom(d_func=lambda kx, ky: (kx, ky, 0.2))
    d = model.d(np.array([0.1, 0.2]), np.array([0.0, 1.0]))
    assert d.shape == (2, 3) and np.allclose(d[:, 2], 0.2)
    assert np.allclose(model.jacobian(0.1, 0.3), MassiveDirac(0.2).jacobian(0.1, 0.3), atol=1e-8)


def test_custom_model_errors_carry_k():
    bad = Custom(d_func=lambda kx, ky: (kx * np.nan, ky, 1.0))
    with pytest.raises(ModelEvaluationError, match="non-finite"):
        bad.d(0.5, 0.5)
    raising = Custom(d_func=lambda kx, ky: 1 / 0)
    with pytest.raises(ModelEvaluationError, match="at k=") as info:
        raising.d(0.25, 0.5)
    assert info.value.k == (0.25, 0.5)


def test_constant_and_linear_factories():
    c = constant_model([0.0, 0.0, 1.0])
    assert np.array_equal(c.jacobian(0.3, 0.1), np.zeros((3, 2)))
    lin = linear_dirac([[1.0, 0.4], [-0.3, 0.7]], 0.5)
    assert np.allclose(lin.d(1.0, 2.0), [1.8, 1.1, 0.5])
    assert np.allclose(lin.jacobian(1.0, 2.0), [[1.0, 0.4], [-0.3, 0.7], [0, 0]])


@pytest.mark.parametrize(
    "spec",
    [
        {"model": "massive_dirac", "m": 0.001},
        {"model": "planar_winding", "n_w": 3},
        {"model": "constant", "d": [0.0, 0.0, 1.0]},
        {"model": "linear_dirac", "velocity": [[1.0, 0.4], [-0.3, 0.7]], "m": 0.5},
    ],
)
def test_model_round_trip(spec):
    model = model_from_dict(spec)
    assert model.to_dict() == spec
    assert np.allclose(model_from_dict(model.to_dict()).d(0.3, 0.4), model.d(0.3, 0.4))


def test_model_from_dict_errors():
    with pytest.raises(ConfigError, match="unknown model"):
        model_from_dict({"model": "graphene"})
    with pytest.raises(ConfigError):
        model_from_dict({"model": "linear_dirac"})
