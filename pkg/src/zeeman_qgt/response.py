"""Gyrotropic conductivity sigma_ab(omega) and kinetic magnetoelectric tensor alpha_ab(omega).

Both tensors are momentum integrals of the four Zeeman sectors of every
ordered band pair (n, m), weighted by occupation and powers of
eps_nm = eps_n - eps_m. The measure is d^2k / (2 pi)^2 on a disk of radius
``cutoff``; column b of each tensor is the response to a unit field along b.

Each of the four printed terms is accumulated separately, so zeroing one
sector leaves the channels fed by the other three bitwise unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.special import expit

from .errors import ConvergenceError, FitError, NodeProximityError
from .geometry import LEVI_CIVITA, SECTORS, closed_form_arrays, decompose
from .model import BANDS, NODE_GUARD, DVectorModel, MassiveDirac, eigen_batch, elements_from_spinors
from .parallel import DEFAULT_CHUNK, chunk_slices, map_ordered, ordered_sum
from .quadrature import radial_rule

CHANNELS = (
    "Im_sigma_minus",
    "Im_sigma_plus",
    "Re_sigma_minus",
    "Re_sigma_plus",
    "Im_alpha_minus",
    "Im_alpha_plus",
    "Re_alpha_minus",
    "Re_alpha_plus",
)

EXPECTED_EXPONENT = {c: (1 if c.startswith("Im") else 2) for c in CHANNELS}

# which sector feeds which channel at leading order
SIGMA_CHANNEL_OF = {"OmegaA": "Im_sigma_minus", "gN": "Im_sigma_plus", "OmegaN": "Re_sigma_minus", "gA": "Re_sigma_plus"}
ALPHA_CHANNEL_OF = {"OmegaN": "Im_alpha_minus", "gA": "Im_alpha_plus", "OmegaA": "Re_alpha_minus", "gN": "Re_alpha_plus"}

SUPPRESSION_FLOOR = 1e-14
DEFAULT_CONVERGENCE_RTOL = 0.05


@dataclass(frozen=True)
class OccupationSpec:
    mu: float = 0.0
    T: float = 0.0

    def __post_init__(self):
        if self.T < 0:
            raise ValueError(f"temperature must be >= 0, got {self.T}")

    def f(self, eps):
        eps = np.asarray(eps, float)
        if self.T == 0:
            return np.where(eps < self.mu, 1.0, np.where(eps > self.mu, 0.0, 0.5))
        return expit(-(eps - self.mu) / self.T)

    def to_dict(self):
        return {"mu": self.mu, "T": self.T}


@dataclass(frozen=True)
class IntegrationDomain:
    """Disk |k| < cutoff with a polar product rule; ``cutoff=None`` means 20 max(|m|, 1)."""

    cutoff: Optional[float] = None
    nr: int = 400
    ntheta: int = 256
    log_radial: bool = True

    def __post_init__(self):
        if self.cutoff is not None and not self.cutoff > 0:
            raise ValueError(f"cutoff must be positive, got {self.cutoff}")
        if self.nr < 8 or self.ntheta < 8:
            raise ValueError("integration grid needs nr, ntheta >= 8")

    def resolve(self, model: DVectorModel) -> "IntegrationDomain":
        if self.cutoff is not None:
            return self
        m = abs(model.m) if isinstance(model, MassiveDirac) else 0.0
        return replace(self, cutoff=20.0 * max(m, 1.0))

    def doubled(self) -> "IntegrationDomain":
        return replace(self, cutoff=2.0 * self.cutoff)

    def rule(self):
        """Flattened kx, ky and weights including the r dr dtheta / (2 pi)^2 measure."""
        r, wr = radial_rule(self.cutoff, self.nr, self.log_radial)
        theta = 2 * np.pi * np.arange(self.ntheta) / self.ntheta
        R, TH = np.meshgrid(r, theta, indexing="ij")
        W = (wr * r)[:, None] * np.full(self.ntheta, 2 * np.pi / self.ntheta)[None, :] / (2 * np.pi) ** 2
        return (R * np.cos(TH)).ravel(), (R * np.sin(TH)).ravel(), W.ravel()

    def to_dict(self):
        return {"cutoff": self.cutoff, "nr": self.nr, "ntheta": self.ntheta, "log_radial": self.log_radial}


@dataclass(frozen=True)
class Prefactors:
    g_muB: float = 1.0
    charge: float = 1.0

    @property
    def scale(self) -> float:
        return self.g_muB * self.charge

    def to_dict(self):
        return {"g_muB": self.g_muB, "charge": self.charge}


# ---------------------------------------------------------------------------
# per-chunk sector data


def _pair_data(model, kx, ky, w, occupation, closed_form=False):
    """Yield (weight * f_n, eps_nm, sectors of pair (n, -n)) for both ordered pairs."""
    d = model.d(kx, ky)
    norm = np.linalg.norm(d, axis=-1)
    near = norm < NODE_GUARD
    if np.any(near):
        f_near = occupation.f(norm[near]) + occupation.f(-norm[near])
        if np.any(f_near != 0):
            raise NodeProximityError(
                "quadrature node within the node guard carries occupation weight; "
                "gap the model or move mu so f_n vanishes near the node"
            )
        keep = ~near
        kx, ky, w, d = kx[keep], ky[keep], w[keep], d[keep]
    jac = model.jacobian(kx, ky)
    eps, u = eigen_batch(d)
    out = []
    for n in BANDS:
        if closed_form:
            sectors = closed_form_arrays(d, jac, n)
            eps_nm = 2.0 * n * np.linalg.norm(d, axis=-1)
            f_n = occupation.f(n * np.linalg.norm(d, axis=-1))
        else:
            eps_nm, r, sig = elements_from_spinors(eps, u, jac, n)
            sectors = decompose(np.einsum("...a,...b->...ab", r, sig))
            f_n = occupation.f(eps[..., 0 if n == 1 else 1])
        out.append((w * f_n, eps_nm, sectors))
    return out


def _lc(vec):
    """Matrix M[a, b] = eps_{abc} v_c, i.e. column b is e_b x v."""
    return np.einsum("abc,...c->...ab", LEVI_CIVITA, vec)


def _weighted(coef, tensor):
    return np.sum(coef[:, None, None] * tensor, axis=0)


def _sector_fields(sectors, zero_sectors):
    out = {}
    for name in SECTORS:
        arr = getattr(sectors, name)
        out[name] = np.zeros_like(arr) if name in zero_sectors else arr
    return out


def _sigma_chunk_terms(pairs, omegas, zero_sectors):
    """(n_omega, 4, 3, 3) complex: the four printed terms, in printed order."""
    res = np.zeros((len(omegas), 4, 3, 3), dtype=complex)
    for wf, eps, sectors in pairs:
        s = _sector_fields(sectors, zero_sectors)
        lc_a, lc_n = _lc(s["OmegaA"]), _lc(s["OmegaN"])
        for i, om in enumerate(omegas):
            res[i, 0] += _weighted(wf * (1j * om / eps), lc_a)
            res[i, 1] += _weighted(wf * (-2j * om / eps), s["gN"])
            res[i, 2] += _weighted(wf * (-(om**2) / eps**2), lc_n)
            res[i, 3] += _weighted(wf * (2 * om**2 / eps**2), s["gA"])
    return res


def _alpha_chunk_terms(pairs, omegas, zero_sectors):
    res = np.zeros((len(omegas), 4, 3, 3), dtype=complex)
    for wf, eps, sectors in pairs:
        # geometric quantities enter with swapped indices (m, n)
        s = _sector_fields(sectors.swapped(), zero_sectors)
        lc_n, lc_a = _lc(s["OmegaN"]), _lc(s["OmegaA"])
        base = wf / (2 * eps)
        for i, om in enumerate(omegas):
            res[i, 0] += _weighted(base * (1j * om / eps), lc_n)
            res[i, 1] += _weighted(base * (2j * om / eps), s["gA"])
            res[i, 2] += _weighted(base * (om**2 / eps**2), lc_a)
            res[i, 3] += _weighted(base * (2 * om**2 / eps**2), s["gN"])
    return res


def _integrate_terms(model, occupation, domain, omegas, which, zero_sectors=(), workers=None, chunk=DEFAULT_CHUNK):
    domain = domain.resolve(model)
    kx, ky, w = domain.rule()
    omegas = np.atleast_1d(np.asarray(omegas, float))
    if np.any(omegas < 0):
        raise ValueError("frequencies must be >= 0")
    zero_sectors = frozenset(zero_sectors)
    unknown = zero_sectors - set(SECTORS)
    if unknown:
        raise ValueError(f"unknown sectors {sorted(unknown)}")
    kernel = _sigma_chunk_terms if which == "sigma" else _alpha_chunk_terms

    def work(sl):
        return kernel(_pair_data(model, kx[sl], ky[sl], w[sl], occupation), omegas, zero_sectors)

    return ordered_sum(map_ordered(work, chunk_slices(kx.size, chunk), workers))


def _sum_terms(terms):
    return terms[..., 0, :, :] + terms[..., 1, :, :] + terms[..., 2, :, :] + terms[..., 3, :, :]


def sigma_terms(model, occupation, domain, omegas, zero_sectors=(), workers=None, prefactors=Prefactors()):
    return prefactors.scale * _integrate_terms(model, occupation, domain, omegas, "sigma", zero_sectors, workers)


def alpha_terms(model, occupation, domain, omegas, zero_sectors=(), workers=None, prefactors=Prefactors()):
    return prefactors.scale * _integrate_terms(model, occupation, domain, omegas, "alpha", zero_sectors, workers)


def sigma_tensor(model, occupation=OccupationSpec(), domain=IntegrationDomain(), omega=0.0, **kw) -> np.ndarray:
    """Complex 3x3 gyrotropic conductivity at one frequency."""
    return _sum_terms(sigma_terms(model, occupation, domain, [omega], **kw))[0]


def alpha_tensor(model, occupation=OccupationSpec(), domain=IntegrationDomain(), omega=0.0, **kw) -> np.ndarray:
    """Complex 3x3 kinetic magnetoelectric tensor at one frequency."""
    return _sum_terms(alpha_terms(model, occupation, domain, [omega], **kw))[0]


def decompose_pm(tensor) -> tuple[complex, complex]:
    t = np.asarray(tensor)
    return 0.5 * (t[..., 0, 1] - t[..., 1, 0]), 0.5 * (t[..., 0, 1] + t[..., 1, 0])


def channels_from_terms(sig_terms, alp_terms) -> dict:
    """Channel values per frequency, each summed term by term."""
    out = {}
    for prefix, terms in (("sigma", sig_terms), ("alpha", alp_terms)):
        minus, plus = decompose_pm(terms)  # (n_omega, 4)
        m = minus[:, 0] + minus[:, 1] + minus[:, 2] + minus[:, 3]
        p = plus[:, 0] + plus[:, 1] + plus[:, 2] + plus[:, 3]
        out[f"Im_{prefix}_minus"] = m.imag
        out[f"Re_{prefix}_minus"] = m.real
        out[f"Im_{prefix}_plus"] = p.imag
        out[f"Re_{prefix}_plus"] = p.real
    return out


# ---------------------------------------------------------------------------
# weighted sector integrals (independent closed-form path)


def weighted_sector_integrals(model, occupation=OccupationSpec(), domain=IntegrationDomain(), workers=None) -> dict:
    """Band-summed sector integrals with the weights of the gyrotropic terms.

    OmegaA and gN carry f_n / eps_nm; OmegaN and gA carry f_n / eps_nm^2.
    To leading order Im sigma^- = omega <OmegaA>_z, Im sigma^+ = -2 omega <gN>_xy,
    Re sigma^- = -omega^2 <OmegaN>_z and Re sigma^+ = 2 omega^2 <gA>_xy.
    """
    return _weighted_integrals(model, occupation, domain, workers, kind="sigma")


def kme_sector_integrals(model, occupation=OccupationSpec(), domain=IntegrationDomain(), workers=None) -> dict:
    """Same with the magnetoelectric weights and (m, n) index order.

    OmegaN, gA carry f_n / (2 eps_nm^2); OmegaA, gN carry f_n / (2 eps_nm^3).
    """
    return _weighted_integrals(model, occupation, domain, workers, kind="alpha")


def _weighted_integrals(model, occupation, domain, workers, kind):
    domain = domain.resolve(model)
    kx, ky, w = domain.rule()
    if kind == "sigma":
        powers = {"OmegaA": 1, "gN": 1, "OmegaN": 2, "gA": 2}
    else:
        powers = {"OmegaN": 2, "gA": 2, "OmegaA": 3, "gN": 3}

    def work(sl):
        acc = {name: 0.0 for name in SECTORS}
        for wf, eps, sectors in _pair_data(model, kx[sl], ky[sl], w[sl], occupation, closed_form=True):
            if kind == "alpha":
                sectors, wf = sectors.swapped(), wf / 2
            for name in SECTORS:
                val = getattr(sectors, name)
                coef = wf / eps ** powers[name]
                acc[name] = acc[name] + np.sum(coef.reshape(coef.shape + (1,) * (val.ndim - 1)) * val, axis=0)
        return np.concatenate([np.ravel(acc[n]) for n in SECTORS])

    flat = ordered_sum(map_ordered(work, chunk_slices(kx.size), workers))
    return _unflatten(flat)


def _unflatten(flat):
    return {
        "gN": flat[0:9].reshape(3, 3),
        "gA": flat[9:18].reshape(3, 3),
        "OmegaN": flat[18:21],
        "OmegaA": flat[21:24],
    }


# ---------------------------------------------------------------------------
# spectra and scaling fits


@dataclass
class ScalingFit:
    channel: str
    exponent: float
    prefactor: float
    r_squared: float
    omega_window: tuple
    n_points: int = 0
    suppressed: bool = False
    expected_exponent: int = 0

    def to_dict(self):
        return {
            "channel": self.channel,
            "exponent": None if self.suppressed else self.exponent,
            "prefactor": None if self.suppressed else self.prefactor,
            "r_squared": None if self.suppressed else self.r_squared,
            "omega_window": list(self.omega_window),
            "n_points": self.n_points,
            "suppressed": self.suppressed,
            "expected_exponent": self.expected_exponent,
        }


@dataclass
class ResponseSpectrum:
    omegas: np.ndarray
    sigma: np.ndarray
    alpha: np.ndarray
    channels: dict
    model: dict = field(default_factory=dict)
    occupation: dict = field(default_factory=dict)
    domain: dict = field(default_factory=dict)
    prefactors: dict = field(default_factory=dict)
    convergence: dict = field(default_factory=dict)
    fits: list = field(default_factory=list)

    @property
    def sigma_minus(self):
        return self.channels["Re_sigma_minus"] + 1j * self.channels["Im_sigma_minus"]

    @property
    def sigma_plus(self):
        return self.channels["Re_sigma_plus"] + 1j * self.channels["Im_sigma_plus"]

    @property
    def alpha_minus(self):
        return self.channels["Re_alpha_minus"] + 1j * self.channels["Im_alpha_minus"]

    @property
    def alpha_plus(self):
        return self.channels["Re_alpha_plus"] + 1j * self.channels["Im_alpha_plus"]

    def to_dict(self) -> dict:
        def c(z):
            z = np.asarray(z)
            return np.stack([z.real, z.imag], axis=-1).tolist()

        return {
            "model": self.model,
            "occupation": self.occupation,
            "domain": self.domain,
            "prefactors": self.prefactors,
            "omegas": np.asarray(self.omegas).tolist(),
            "sigma": c(self.sigma),
            "alpha": c(self.alpha),
            "sigma_minus": c(self.sigma_minus),
            "sigma_plus": c(self.sigma_plus),
            "alpha_minus": c(self.alpha_minus),
            "alpha_plus": c(self.alpha_plus),
            "convergence": self.convergence,
            "fits": [f.to_dict() for f in self.fits],
        }


def frequency_sweep(lo: float, hi: float, n: int, log: bool = True) -> np.ndarray:
    return np.geomspace(lo, hi, n) if log and lo > 0 else np.linspace(lo, hi, n)


def spectral_gap(model, domain=IntegrationDomain()) -> float:
    """2 min |d| over the quadrature nodes."""
    domain = domain.resolve(model)
    kx, ky, _ = domain.rule()
    return float(2 * np.linalg.norm(model.d(kx, ky), axis=-1).min())


def _relative_delta(a, b):
    scale = max(np.abs(b).max(), np.abs(a).max())
    return float(np.abs(a - b).max() / scale) if scale > 0 else 0.0


def response_spectrum(
    model,
    occupation=OccupationSpec(),
    domain=IntegrationDomain(),
    omegas=None,
    prefactors=Prefactors(),
    workers=None,
    convergence_rtol: float = DEFAULT_CONVERGENCE_RTOL,
    check_convergence: bool = True,
    fit_window=None,
    zero_sectors=(),
) -> ResponseSpectrum:
    """sigma and alpha over a frequency sweep, with a cutoff-doubling convergence delta."""
    domain = domain.resolve(model)
    if omegas is None:
        gap = spectral_gap(model, domain)
        omegas = frequency_sweep(1e-4 * gap, 1e-3 * gap, 8)
    omegas = np.asarray(omegas, float)
    kw = dict(zero_sectors=zero_sectors, workers=workers, prefactors=prefactors)
    st = sigma_terms(model, occupation, domain, omegas, **kw)
    at = alpha_terms(model, occupation, domain, omegas, **kw)
    sigma, alpha = _sum_terms(st), _sum_terms(at)
    convergence = {"cutoff": domain.cutoff, "cutoff_doubled": None, "sigma_delta": None, "alpha_delta": None}
    if check_convergence:
        big = domain.doubled()
        sigma2 = _sum_terms(sigma_terms(model, occupation, big, omegas, **kw))
        alpha2 = _sum_terms(alpha_terms(model, occupation, big, omegas, **kw))
        convergence.update(
            cutoff_doubled=big.cutoff,
            sigma_delta=_relative_delta(sigma, sigma2),
            alpha_delta=_relative_delta(alpha, alpha2),
            rtol=convergence_rtol,
        )
        worst = max(convergence["sigma_delta"], convergence["alpha_delta"])
        if worst > convergence_rtol:
            raise ConvergenceError(
                f"cutoff doubling {domain.cutoff:g} -> {big.cutoff:g} changed the response by "
                f"{worst:.3g} (relative) > {convergence_rtol:g}",
                value={"sigma": sigma, "alpha": alpha},
                value_doubled={"sigma": sigma2, "alpha": alpha2},
                cutoffs=(domain.cutoff, big.cutoff),
            )
    spec = ResponseSpectrum(
        omegas=omegas,
        sigma=sigma,
        alpha=alpha,
        channels=channels_from_terms(st, at),
        model=model.to_dict(),
        occupation=occupation.to_dict(),
        domain=domain.to_dict(),
        prefactors=prefactors.to_dict(),
        convergence=convergence,
    )
    positive = omegas[omegas > 0]
    if positive.size >= 6 and positive.max() / positive.min() >= 10 * (1 - 1e-12):
        spec.fits = [scaling_fit(spec, ch, window=fit_window) for ch in CHANNELS]
    return spec


def scaling_fit(spectrum: ResponseSpectrum, channel: str, window=None, floor: float = SUPPRESSION_FLOOR) -> ScalingFit:
    """Least-squares power law |value| = |prefactor| omega^exponent on log-log data."""
    if channel not in CHANNELS:
        raise FitError(f"unknown channel {channel!r}; expected one of {CHANNELS}")
    om = np.asarray(spectrum.omegas, float)
    vals = np.asarray(spectrum.channels[channel], float)
    sel = om > 0
    if window is not None:
        sel &= (om >= window[0]) & (om <= window[1])
    om, vals = om[sel], vals[sel]
    if om.size < 6 or om.max() / om.min() < 10 * (1 - 1e-12):
        raise FitError(f"need >= 6 frequencies spanning a decade for a scaling fit, got {om.size} in window")
    win = (float(om.min()), float(om.max()))
    above = np.abs(vals) > floor
    if above.sum() < 3:
        return ScalingFit(channel, math.nan, 0.0, math.nan, win, int(above.sum()), True, EXPECTED_EXPONENT[channel])
    x, y = np.log(om[above]), np.log(np.abs(vals[above]))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    sign = float(np.sign(np.median(vals[above])))
    return ScalingFit(
        channel, float(slope), sign * math.exp(intercept), float(r2), win, int(above.sum()), False, EXPECTED_EXPONENT[channel]
    )
