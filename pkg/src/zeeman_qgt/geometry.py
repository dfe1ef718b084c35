"""Conventional and Zeeman quantum geometric tensors of a two-band pair.

The Zeeman tensor T_Z^{ab} = r^a_{nm} sigma^b_{mn} is split into four real
sectors by index symmetry and by real/imaginary character::

    T_Z^{ab} = gN^{ab} + i gA^{ab} - 1/2 eps_{abc} (OmegaA_c + i OmegaN_c)

For a two-band model the band quantity X_n is identified with the pair
quantity X_{n,-n}.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .model import (
    BandPairElements,
    DVectorModel,
    KPoint,
    check_node_guard,
)

LEVI_CIVITA = np.zeros((3, 3, 3))
LEVI_CIVITA[0, 1, 2] = LEVI_CIVITA[1, 2, 0] = LEVI_CIVITA[2, 0, 1] = 1.0
LEVI_CIVITA[0, 2, 1] = LEVI_CIVITA[2, 1, 0] = LEVI_CIVITA[1, 0, 2] = -1.0

SECTORS = ("gN", "gA", "OmegaN", "OmegaA")

# flipped only by the validation suite's mutation mode
_OMEGA_A_SIGN = 1.0


@contextmanager
def flipped_omega_a():
    """Temporarily negate the closed-form OmegaA (mutation testing of the validators)."""
    global _OMEGA_A_SIGN
    _OMEGA_A_SIGN = -1.0
    try:
        yield
    finally:
        _OMEGA_A_SIGN = 1.0


@dataclass(frozen=True, eq=False)
class ConventionalQGT:
    T: np.ndarray
    g: np.ndarray
    Omega: np.ndarray
    Omega_vec: np.ndarray


@dataclass(frozen=True, eq=False)
class ZeemanQGT:
    T_Z: np.ndarray

    def hermiticity_defect(self) -> float:
        return float(np.linalg.norm(self.T_Z - self.T_Z.conj().T))


@dataclass(frozen=True, eq=False)
class SectorDecomposition:
    """The four real sectors of a Zeeman-type tensor.

    ``gA`` holds the real coefficients of the imaginary symmetric part.
    Arrays may carry leading batch axes.
    """

    gN: np.ndarray
    gA: np.ndarray
    OmegaN: np.ndarray
    OmegaA: np.ndarray
    band_pair: tuple | None = None

    def reconstruct(self) -> np.ndarray:
        anti = np.einsum("abc,...c->...ab", LEVI_CIVITA, self.OmegaA + 1j * self.OmegaN)
        return self.gN + 1j * self.gA - 0.5 * anti

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in SECTORS}

    def swapped(self) -> "SectorDecomposition":
        """Sectors of the (m, n) pair: the tensor is complex-conjugated."""
        pair = None if self.band_pair is None else self.band_pair[::-1]
        return SectorDecomposition(self.gN, -self.gA, -self.OmegaN, self.OmegaA, pair)


def conventional_qgt(elements: BandPairElements) -> ConventionalQGT:
    r = elements.r
    T = np.einsum("...a,...b->...ab", r, r.conj())
    Omega = -2.0 * T.imag
    return ConventionalQGT(
        T=T,
        g=T.real,
        Omega=Omega,
        Omega_vec=0.5 * np.einsum("cab,...ab->...c", LEVI_CIVITA, Omega),
    )


def zeeman_qgt(elements: BandPairElements) -> ZeemanQGT:
    return ZeemanQGT(T_Z=np.einsum("...a,...b->...ab", elements.r, elements.sigma))


def decompose(T, band_pair=None) -> SectorDecomposition:
    """Split any complex (..., 3, 3) tensor into its four real sectors."""
    if isinstance(T, ZeemanQGT):
        T = T.T_Z
    elif isinstance(T, ConventionalQGT):
        T = T.T
    T = np.asarray(T, dtype=complex)
    sym = 0.5 * (T + np.swapaxes(T, -1, -2))
    cross = np.einsum("cab,...ab->...c", LEVI_CIVITA, T)
    return SectorDecomposition(
        gN=sym.real,
        gA=sym.imag,
        OmegaN=-cross.imag,
        OmegaA=-cross.real,
        band_pair=band_pair,
    )


def unit_vector_derivatives(d: np.ndarray, jac: np.ndarray):
    """d-hat and D[..., b, a] = d(d-hat_b)/d(k_a) for a in (x, y, z); z column is zero."""
    norm = np.linalg.norm(d, axis=-1)
    dh = d / norm[..., None]
    proj = np.einsum("...b,...ba->...a", dh, jac)
    D2 = (jac - dh[..., :, None] * proj[..., None, :]) / norm[..., None, None]
    D = np.zeros(d.shape[:-1] + (3, 3))
    D[..., :, :2] = D2
    return dh, D


def closed_form_arrays(d: np.ndarray, jac: np.ndarray, n: int) -> SectorDecomposition:
    """Band-resolved sectors built from d-hat and its k-derivatives only."""
    dh, D = unit_vector_derivatives(d, jac)
    curl = np.einsum("cab,...ba->...c", LEVI_CIVITA, D)
    div = np.trace(D, axis1=-2, axis2=-1)
    advect = np.einsum("...a,...ba->...b", dh, D)
    # X[a, b] = (d-hat x d_a d-hat)_b
    X = np.cross(dh[..., None, :], np.swapaxes(D, -1, -2))
    return SectorDecomposition(
        gN=0.25 * (X + np.swapaxes(X, -1, -2)),
        gA=-0.25 * n * (D + np.swapaxes(D, -1, -2)),
        OmegaN=0.5 * n * curl,
        OmegaA=-0.5 * _OMEGA_A_SIGN * (dh * div[..., None] - advect),
        band_pair=(n, -n),
    )


def closed_form_sectors(model: DVectorModel, k, n: int) -> SectorDecomposition:
    k = KPoint.coerce(k)
    d = model.d(k.kx, k.ky)
    check_node_guard(d, k.kx, k.ky)
    return closed_form_arrays(d, model.jacobian(k.kx, k.ky), n)


def berry_curvature_xy_arrays(d: np.ndarray, jac: np.ndarray, n: int) -> np.ndarray:
    """-n/2 (d_x d-hat x d_y d-hat) . d-hat."""
    dh, D = unit_vector_derivatives(d, jac)
    return -0.5 * n * np.einsum("...c,...c->...", np.cross(D[..., :, 0], D[..., :, 1]), dh)


def berry_curvature_xy(model: DVectorModel, k, n: int) -> float:
    k = KPoint.coerce(k)
    d = model.d(k.kx, k.ky)
    check_node_guard(d, k.kx, k.ky)
    return float(berry_curvature_xy_arrays(d, model.jacobian(k.kx, k.ky), n))
