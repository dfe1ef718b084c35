"""Self-validation suite: every cross-check between independent computation paths.

Each check returns a ``CheckResult``; ``run_validation`` collects them into a
machine-readable report. ``mutation="flip-omega-a"`` negates the closed-form
OmegaA to confirm the duality and flux checks are actually sensitive to it.
"""

from __future__ import annotations

import math
import time
from contextlib import nullcontext
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .fields import Contour, Grid2D, dual_check, hodge_residuals, topological_charges, contour_flux
from .geometry import SECTORS, closed_form_arrays, decompose, flipped_omega_a
from .model import MassiveDirac, PlanarWinding, eigen_batch, elements_from_spinors, linear_dirac
from .response import (
    ALPHA_CHANNEL_OF,
    SIGMA_CHANNEL_OF,
    IntegrationDomain,
    OccupationSpec,
    alpha_terms,
    channels_from_terms,
    sigma_terms,
)
from .symmetry import DATA_SHA256, allowed_sectors, data_checksum, group_labels, groups_allowing

MUTATIONS = ("flip-omega-a",)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float | None = None
    tolerance: float | None = None
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0


def _random_k(rng, n, scale=3.0, min_norm=1e-3, mass=0.0):
    k = rng.uniform(-scale, scale, size=(n, 2))
    bad = np.hypot(k[:, 0], k[:, 1]) ** 2 + mass**2 < min_norm**2
    k[bad] += 2 * min_norm
    return k[:, 0], k[:, 1]


def _zeeman_tensor(eps, u, jac, n):
    _, r, sig = elements_from_spinors(eps, u, jac, n)
    return np.einsum("...a,...b->...ab", r, sig)


def check_gauge_invariance(rng, n_k=1000):
    model = MassiveDirac(0.7)
    kx, ky = _random_k(rng, n_k)
    d, jac = model.d(kx, ky), model.jacobian(kx, ky)
    eps, u = eigen_batch(d)
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=(n_k, 1, 2)))
    worst = 0.0
    for n in (1, -1):
        worst = max(worst, np.abs(_zeeman_tensor(eps, u, jac, n) - _zeeman_tensor(eps, u * phases, jac, n)).max())
    return CheckResult("gauge_invariance", worst <= 1e-12, worst, 1e-12)


def check_closed_form(rng, n_k=1000):
    worst = 0.0
    for m in (0.1, 1.0, 10.0):
        model = MassiveDirac(m)
        kx, ky = _random_k(rng, n_k, mass=m)
        d, jac = model.d(kx, ky), model.jacobian(kx, ky)
        eps, u = eigen_batch(d)
        for n in (1, -1):
            a = decompose(_zeeman_tensor(eps, u, jac, n))
            b = closed_form_arrays(d, jac, n)
            for s in SECTORS:
                worst = max(worst, float(np.abs(getattr(a, s) - getattr(b, s)).max()))
    return CheckResult("closed_form_vs_definitional", worst <= 1e-8, worst, 1e-8)


def check_band_sum_rules(rng, n_k=1000):
    model = MassiveDirac(0.5)
    kx, ky = _random_k(rng, n_k)
    d, jac = model.d(kx, ky), model.jacobian(kx, ky)
    up, dn = closed_form_arrays(d, jac, 1), closed_form_arrays(d, jac, -1)
    devs = {
        "OmegaN_sum": np.abs(up.OmegaN + dn.OmegaN).max(),
        "gA_sum": np.abs(up.gA + dn.gA).max(),
        "OmegaA_diff": np.abs(up.OmegaA - dn.OmegaA).max(),
        "gN_diff": np.abs(up.gN - dn.gN).max(),
    }
    worst = float(max(devs.values()))
    return CheckResult("band_sum_rules", worst <= 1e-12, worst, 1e-12, {k: float(v) for k, v in devs.items()})


def check_hodge_duality():
    grid = Grid2D.polar(0.05, 3.0, 48, 64)
    devs = {}
    for model in (MassiveDirac(0.0), PlanarWinding(2), PlanarWinding(3)):
        devs[str(model.to_dict())] = dual_check(model, grid)["max_deviation"]
    worst = max(devs.values())
    return CheckResult("hodge_duality", worst <= 1e-10, worst, 1e-10, devs)


def check_gauss_index():
    circle = Contour.circle(radius=1.0, samples=1024)
    ch = topological_charges(MassiveDirac(1e-4), circle)
    detail = {"Q_massive": ch.Q, "C_w_massive": ch.C_w}
    ok = abs(ch.Q - 1) <= 1e-3 and ch.C_w == 1
    worst = abs(ch.Q - 1)
    for n_w in (1, 2, 3):
        c = topological_charges(PlanarWinding(n_w), circle)
        detail[f"Q_nw{n_w}"], detail[f"C_w_nw{n_w}"] = c.Q, c.C_w
        ok &= c.C_w == n_w and abs(c.Q - n_w) <= 1e-6 and c.residuals["C_w"] < 1e-6
        worst = max(worst, abs(c.Q - n_w))
    return CheckResult("gauss_index", bool(ok), worst, 1e-3, detail)


def check_radius_independence():
    model = MassiveDirac(0.0)
    fluxes = [contour_flux(model, Contour.circle(radius=r, samples=1024)) for r in (0.5, 1.0, 2.0, 4.0)]
    spread = float(np.ptp(fluxes))
    return CheckResult("radius_independence", spread <= 1e-6, spread, 1e-6, {"fluxes": fluxes})


def check_convergence_order():
    model = PlanarWinding(1)
    sizes = (65, 129, 257)
    res = np.array([hodge_residuals(model, Grid2D.cartesian((0.5, 1.5), (0.5, 1.5), n, n)) for n in sizes])
    orders = np.log2(res[:-1] / res[1:])
    finest = orders[-1]
    ok = bool(np.all(np.abs(finest - 2.0) <= 0.2))
    return CheckResult(
        "hodge_convergence_order",
        ok,
        float(finest.min()),
        0.2,
        {"grid_sizes": list(sizes), "residuals": res.tolist(), "orders": orders.tolist()},
    )


def check_sector_ablation():
    model = linear_dirac([[1.0, 0.4], [-0.3, 0.7]], 0.5)
    domain = IntegrationDomain(cutoff=10.0, nr=96, ntheta=64)
    occ = OccupationSpec()
    omegas = [1e-3, 2e-3]

    def chans(zero=()):
        return channels_from_terms(
            sigma_terms(model, occ, domain, omegas, zero_sectors=zero),
            alpha_terms(model, occ, domain, omegas, zero_sectors=zero),
        )

    base = chans()
    ok, detail = True, {}
    for sector in SECTORS:
        abl = chans((sector,))
        changed = sorted(c for c in base if not np.array_equal(base[c], abl[c]))
        expected = sorted({SIGMA_CHANNEL_OF[sector], ALPHA_CHANNEL_OF[sector]})
        detail[sector] = changed
        ok &= changed == expected
    return CheckResult("sector_ablation", bool(ok), None, None, detail)


def check_symmetry_table():
    ok = data_checksum() == DATA_SHA256
    for g in group_labels():
        for s in SECTORS:
            ok &= (g in groups_allowing(s)) == (s in allowed_sectors(g))
    return CheckResult("symmetry_table", bool(ok), None, None, {"sha256": data_checksum()})


CHECKS = (
    ("gauge_invariance", check_gauge_invariance, True),
    ("closed_form_vs_definitional", check_closed_form, True),
    ("band_sum_rules", check_band_sum_rules, True),
    ("hodge_duality", check_hodge_duality, False),
    ("gauss_index", check_gauss_index, False),
    ("radius_independence", check_radius_independence, False),
    ("hodge_convergence_order", check_convergence_order, False),
    ("sector_ablation", check_sector_ablation, False),
    ("symmetry_table", check_symmetry_table, False),
)


def run_validation(mutation: str | None = None, seed: int = 20240601, only=None) -> dict:
    if mutation is not None and mutation not in MUTATIONS:
        raise ValueError(f"unknown mutation {mutation!r}; expected one of {MUTATIONS}")
    rng = np.random.default_rng(seed)
    results = []
    ctx = flipped_omega_a() if mutation == "flip-omega-a" else nullcontext()
    with ctx:
        for name, check, needs_rng in CHECKS:
            if only and name not in only:
                continue
            t0 = time.perf_counter()
            try:
                res = check(rng) if needs_rng else check()
            except Exception as exc:  # noqa: BLE001 - a crashing check is a failed check
                res = CheckResult(name, False, detail={"error": f"{type(exc).__name__}: {exc}"})
            res.seconds = time.perf_counter() - t0
            results.append(res)
    return {
        "version": __version__,
        "mutation": mutation,
        "seed": seed,
        "passed": all(r.passed for r in results),
        "checks": [_clean(asdict(r)) for r in results],
    }


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
