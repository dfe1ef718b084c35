"""Two-band d-vector Hamiltonians H(k) = d(k) . sigma and their interband elements.

All array-valued helpers broadcast over ``kx``/``ky``; the trailing axes hold
the vector (3,) or Jacobian (3, 2) components. Band labels are the integers
+1 (upper) and -1 (lower); in spinor arrays the upper band is column 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ModelEvaluationError, NodeProximityError

NODE_GUARD = 1e-9

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

BANDS = (1, -1)


def band_column(n: int) -> int:
    if n == 1:
        return 0
    if n == -1:
        return 1
    raise ValueError(f"band label must be +1 or -1, got {n!r}")


@dataclass(frozen=True)
class KPoint:
    kx: float
    ky: float

    def __post_init__(self):
        if not (math.isfinite(self.kx) and math.isfinite(self.ky)):
            raise ValueError(f"non-finite k-point ({self.kx}, {self.ky})")

    @classmethod
    def coerce(cls, k) -> "KPoint":
        if isinstance(k, KPoint):
            return k
        kx, ky = k
        return cls(float(kx), float(ky))

    def as_array(self) -> np.ndarray:
        return np.array([self.kx, self.ky])


# ---------------------------------------------------------------------------
# model catalog


class DVectorModel:
    """Base class. Subclasses implement ``_d`` and optionally ``_jacobian``."""

    description: str = ""

    def d(self, kx, ky) -> np.ndarray:
        kx, ky = np.broadcast_arrays(np.asarray(kx, float), np.asarray(ky, float))
        return self._d(kx, ky)

    def jacobian(self, kx, ky) -> np.ndarray:
        """Return ``J[..., b, a] = d(d_b)/d(k_a)`` with shape (..., 3, 2)."""
        kx, ky = np.broadcast_arrays(np.asarray(kx, float), np.asarray(ky, float))
        return self._jacobian(kx, ky)

    def _d(self, kx, ky):
        raise NotImplementedError

    def _jacobian(self, kx, ky):
        return finite_difference_jacobian(self._d, kx, ky)

    @property
    def is_planar(self) -> bool:
        return False

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class MassiveDirac(DVectorModel):
    """d = (kx, ky, m)."""

    m: float = 0.0
    description: str = "massive 2D Dirac model"

    def _d(self, kx, ky):
        return np.stack([kx, ky, np.full_like(kx, self.m)], axis=-1)

    def _jacobian(self, kx, ky):
        jac = np.zeros(kx.shape + (3, 2))
        jac[..., 0, 0] = 1.0
        jac[..., 1, 1] = 1.0
        return jac

    @property
    def is_planar(self):
        return self.m == 0.0

    def to_dict(self):
        return {"model": "massive_dirac", "m": self.m}


@dataclass(frozen=True)
class PlanarWinding(DVectorModel):
    """d = (Re z^n, Im z^n, 0) with z = kx + i ky; a node of winding n_w at k = 0."""

    n_w: int = 1
    description: str = "planar winding defect"

    def __post_init__(self):
        if int(self.n_w) != self.n_w or self.n_w < 1:
            raise ValueError(f"n_w must be an integer >= 1, got {self.n_w!r}")

    def _d(self, kx, ky):
        zn = (kx + 1j * ky) ** self.n_w
        return np.stack([zn.real, zn.imag, np.zeros_like(kx)], axis=-1)

    def _jacobian(self, kx, ky):
        dz = self.n_w * (kx + 1j * ky) ** (self.n_w - 1)
        jac = np.zeros(kx.shape + (3, 2))
        jac[..., 0, 0] = dz.real
        jac[..., 1, 0] = dz.imag
        jac[..., 0, 1] = (1j * dz).real
        jac[..., 1, 1] = (1j * dz).imag
        return jac

    @property
    def is_planar(self):
        return True

    def to_dict(self):
        return {"model": "planar_winding", "n_w": int(self.n_w)}


@dataclass(frozen=True, eq=False)
class Custom(DVectorModel):
    """User-supplied d-vector.

    ``d_func(kx, ky)`` must return three components (dx, dy, dz), each a
    scalar or an array broadcastable against ``kx``. ``jacobian_func`` (same
    calling convention) returns a nested 3x2 structure ``[[ddx/dkx, ddx/dky],
    ...]``; without it, central differences are used.
    """

    d_func: Callable = None
    jacobian_func: Optional[Callable] = None
    description: str = "custom d-vector"
    params: dict = field(default_factory=dict)
    planar: bool = False

    def _call(self, func, kx, ky, shape):
        try:
            out = func(kx, ky)
            if shape == (3,):
                comps = [out[b] for b in range(3)]
            else:
                comps = [out[b][a] for b in range(3) for a in range(2)]
            arr = np.stack([np.broadcast_to(np.asarray(c, float), kx.shape) for c in comps], axis=-1)
        except Exception as exc:  # noqa: BLE001 - user code, re-raised with context
            k = (float(np.ravel(kx)[0]), float(np.ravel(ky)[0])) if kx.size else None
            raise ModelEvaluationError(f"custom model evaluation failed: {exc}", k=k) from exc
        bad = ~np.isfinite(arr).all(axis=-1)
        if np.any(bad):
            idx = tuple(np.argwhere(np.atleast_1d(bad))[0])
            kxa, kya = np.atleast_1d(kx), np.atleast_1d(ky)
            raise ModelEvaluationError("custom model returned non-finite values", k=(kxa[idx], kya[idx]))
        return arr.reshape(kx.shape + shape)

    def _d(self, kx, ky):
        return self._call(self.d_func, kx, ky, (3,))

    def _jacobian(self, kx, ky):
        if self.jacobian_func is None:
            return finite_difference_jacobian(self._d, kx, ky)
        return self._call(self.jacobian_func, kx, ky, (3, 2))

    @property
    def is_planar(self):
        return self.planar

    def to_dict(self):
        if not self.params:
            return {"model": "custom", "description": self.description}
        return dict(self.params)


def constant_model(d) -> Custom:
    d = tuple(float(x) for x in d)
    return Custom(
        d_func=lambda kx, ky: d,
        jacobian_func=lambda kx, ky: np.zeros((3, 2)),
        description="k-independent d-vector",
        params={"model": "constant", "d": list(d)},
        planar=d[2] == 0.0,
    )


def linear_dirac(velocity, m: float = 0.0) -> Custom:
    """Anisotropic Dirac cone d = (A k, m) for a real 2x2 velocity matrix A."""
    a = np.asarray(velocity, float).reshape(2, 2)
    m = float(m)
    (a00, a01), (a10, a11) = a.tolist()
    return Custom(
        d_func=lambda kx, ky: (a00 * kx + a01 * ky, a10 * kx + a11 * ky, m),
        jacobian_func=lambda kx, ky: [[a00, a01], [a10, a11], [0.0, 0.0]],
        description="anisotropic linear Dirac cone",
        params={"model": "linear_dirac", "velocity": a.tolist(), "m": m},
        planar=m == 0.0,
    )


def finite_difference_jacobian(d_func, kx, ky):
    h = 1e-6 * np.maximum(1.0, np.hypot(kx, ky))
    dx = (d_func(kx + h, ky) - d_func(kx - h, ky)) / (2 * h)[..., None]
    dy = (d_func(kx, ky + h) - d_func(kx, ky - h)) / (2 * h)[..., None]
    return np.stack([dx, dy], axis=-1)


def model_from_dict(spec: dict) -> DVectorModel:
    from .errors import ConfigError

    spec = dict(spec)
    name = spec.pop("model", None)
    try:
        if name == "massive_dirac":
            return MassiveDirac(m=float(spec.pop("m", 0.0)))
        if name == "planar_winding":
            return PlanarWinding(n_w=int(spec.pop("n_w", 1)))
        if name == "constant":
            return constant_model(spec.pop("d"))
        if name == "linear_dirac":
            return linear_dirac(spec.pop("velocity"), spec.pop("m", 0.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameters for model {name!r}: {exc}") from exc
    raise ConfigError(
        f"unknown model {name!r}; expected one of massive_dirac, planar_winding, constant, linear_dirac"
    )


# ---------------------------------------------------------------------------
# eigen-systems and matrix elements


def evaluate_d(model: DVectorModel, k) -> tuple[np.ndarray, np.ndarray]:
    """d(k) and its Jacobian ``J[b, a] = d(d_b)/d(k_a)`` at one k-point."""
    k = KPoint.coerce(k)
    return model.d(k.kx, k.ky), model.jacobian(k.kx, k.ky)


def velocity(model: DVectorModel, k) -> np.ndarray:
    """Columns v_a = d(d)/d(k_a), shape (3, 2)."""
    return evaluate_d(model, k)[1]


def velocity_perp(model: DVectorModel, k) -> np.ndarray:
    """v_a minus its projection on d-hat, shape (3, 2)."""
    d, jac = evaluate_d(model, k)
    dh = d / np.linalg.norm(d)
    return jac - np.outer(dh, dh @ jac)


def hamiltonian(d: np.ndarray) -> np.ndarray:
    return np.einsum("...b,bij->...ij", d, PAULI)


def check_node_guard(d: np.ndarray, kx=None, ky=None, guard: float = NODE_GUARD):
    norm = np.linalg.norm(d, axis=-1)
    bad = norm < guard
    if np.any(bad):
        idx = np.argwhere(np.atleast_1d(bad))[0]
        k = None
        if kx is not None:
            kxa, kya = np.broadcast_arrays(np.atleast_1d(kx), np.atleast_1d(ky))
            k = (float(kxa[tuple(idx)]), float(kya[tuple(idx)]))
        where = f" at k={k}" if k is not None else ""
        raise NodeProximityError(
            f"|d| = {float(np.atleast_1d(norm)[tuple(idx)]):.3g} < node guard {guard:g}{where}; "
            "route grids and contours away from the node"
        )
    return norm


def gauge_fix(u: np.ndarray) -> np.ndarray:
    """Make the largest-modulus component of every column real and positive."""
    idx = np.argmax(np.abs(u), axis=-2)
    lead = np.take_along_axis(u, idx[..., None, :], axis=-2)
    return u * (np.abs(lead) / lead)


def eigen_batch(d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (..., 2) ordered (+, -) and gauge-fixed spinors (..., 2, 2) as columns."""
    w, v = np.linalg.eigh(hamiltonian(d))
    return w[..., ::-1], gauge_fix(v[..., ::-1])


@dataclass(frozen=True, eq=False)
class EigenSystem:
    k: KPoint
    eps: np.ndarray
    u: np.ndarray

    def spinor(self, n: int) -> np.ndarray:
        return self.u[:, band_column(n)]


def eigensystem(model: DVectorModel, k) -> EigenSystem:
    k = KPoint.coerce(k)
    d = model.d(k.kx, k.ky)
    check_node_guard(d, k.kx, k.ky)
    eps, u = eigen_batch(d)
    return EigenSystem(k=k, eps=eps, u=u)


@dataclass(frozen=True, eq=False)
class BandPairElements:
    """Interband position r^a_{nm} and spin sigma^b_{mn} elements for n != m."""

    k: KPoint
    n: int
    m: int
    eps_nm: float
    r: np.ndarray
    sigma: np.ndarray


def elements_from_spinors(eps, u, jac, n: int):
    """(eps_nm, r_nm, sigma_mn) from eigenpairs and the d-Jacobian; broadcasts.

    r^a_{nm} = i <u_n|dH/dk_a|u_m> / (eps_m - eps_n), with r^z = 0.
    """
    i_n, i_m = band_column(n), band_column(-n)
    un = u[..., :, i_n]
    um = u[..., :, i_m]
    # <u_x| sigma_b |u_y> for all b
    sig_nm = np.einsum("...i,bij,...j->...b", un.conj(), PAULI, um)
    sig_mn = np.einsum("...i,bij,...j->...b", um.conj(), PAULI, un)
    eps_n, eps_m = eps[..., i_n], eps[..., i_m]
    vel_nm = np.einsum("...b,...ba->...a", sig_nm, jac)
    r = np.zeros(vel_nm.shape[:-1] + (3,), dtype=complex)
    r[..., :2] = 1j * vel_nm / (eps_m - eps_n)[..., None]
    return eps_n - eps_m, r, sig_mn


def pair_elements_batch(model: DVectorModel, kx, ky, n: int):
    d = model.d(kx, ky)
    check_node_guard(d, kx, ky)
    eps, u = eigen_batch(d)
    return elements_from_spinors(eps, u, model.jacobian(kx, ky), n)


def band_pair_elements(model: DVectorModel, k, n: int) -> BandPairElements:
    k = KPoint.coerce(k)
    eps_nm, r, sigma = pair_elements_batch(model, k.kx, k.ky, n)
    return BandPairElements(k=k, n=n, m=-n, eps_nm=float(eps_nm), r=r, sigma=sigma)


def spin_expectation(model: DVectorModel, k, n: int) -> np.ndarray:
    es = eigensystem(model, k)
    u = es.spinor(n)
    return np.einsum("i,bij,j->b", u.conj(), PAULI, u).real

