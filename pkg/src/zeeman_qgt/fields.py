"""Geometric fields on momentum grids and contours, and local nodal invariants.

Distributional statements at a node are only ever checked through contour
or disk integrals; nothing here evaluates a field at the node itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ContourError, GridError, NodeProximityError, PlanarityError, UndersampledContourError
from .geometry import berry_curvature_xy_arrays, closed_form_arrays
from .model import NODE_GUARD, DVectorModel, MassiveDirac, check_node_guard
from .parallel import chunk_slices, map_ordered
from .quadrature import disk_rule, fan_rule

MIN_GRID_NODES = 8
MIN_CONTOUR_SAMPLES = 64
DEFAULT_CONTOUR_SAMPLES = 256

QUANTITIES = ("OmegaA", "OmegaN", "gN", "gA", "winding_field", "berry_curvature_xy")
VECTOR_LABELS = ("x", "y", "z")


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class Grid2D:
    kind: str
    params: dict
    excludes_node: bool = True

    @classmethod
    def cartesian(cls, kx_range, ky_range, nx: int, ny: int, excludes_node: bool = True) -> "Grid2D":
        if nx < MIN_GRID_NODES or ny < MIN_GRID_NODES:
            raise GridError(f"Cartesian grid needs >= {MIN_GRID_NODES} nodes per axis, got {nx}x{ny}")
        kx_range, ky_range = tuple(map(float, kx_range)), tuple(map(float, ky_range))
        if not (kx_range[1] > kx_range[0] and ky_range[1] > ky_range[0]):
            raise GridError(f"empty grid ranges {kx_range}, {ky_range}")
        return cls("cartesian", {"kx_range": kx_range, "ky_range": ky_range, "nx": int(nx), "ny": int(ny)}, excludes_node)

    @classmethod
    def polar(
        cls,
        r_min: float,
        r_max: float,
        nr: int,
        ntheta: int,
        log_radial: bool = False,
        center=(0.0, 0.0),
        excludes_node: bool = True,
    ) -> "Grid2D":
        if nr < MIN_GRID_NODES or ntheta < MIN_GRID_NODES:
            raise GridError(f"polar grid needs >= {MIN_GRID_NODES} nodes per axis, got {nr}x{ntheta}")
        if excludes_node and r_min <= 0:
            raise NodeProximityError(f"polar grid with r_min={r_min} includes the node; use r_min > 0")
        if r_max <= r_min or r_min < 0:
            raise GridError(f"need 0 <= r_min < r_max, got {r_min}, {r_max}")
        if log_radial and r_min <= 0:
            raise GridError("log-radial spacing needs r_min > 0")
        return cls(
            "polar",
            {
                "r_min": float(r_min),
                "r_max": float(r_max),
                "nr": int(nr),
                "ntheta": int(ntheta),
                "log_radial": bool(log_radial),
                "center": tuple(map(float, center)),
            },
            excludes_node,
        )

    @classmethod
    def from_dict(cls, spec: dict) -> "Grid2D":
        spec = dict(spec)
        kind = spec.pop("kind", "cartesian")
        if kind == "cartesian":
            return cls.cartesian(**spec)
        if kind == "polar":
            return cls.polar(**spec)
        raise GridError(f"unknown grid kind {kind!r}")

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "excludes_node": self.excludes_node}
        out.update({k: list(v) if isinstance(v, tuple) else v for k, v in self.params.items()})
        return out

    @property
    def shape(self) -> tuple:
        p = self.params
        return (p["nx"], p["ny"]) if self.kind == "cartesian" else (p["nr"], p["ntheta"])

    @property
    def size(self) -> int:
        return self.shape[0] * self.shape[1]

    def axes(self):
        p = self.params
        if self.kind == "cartesian":
            return np.linspace(*p["kx_range"], p["nx"]), np.linspace(*p["ky_range"], p["ny"])
        if p["log_radial"]:
            r = np.geomspace(p["r_min"], p["r_max"], p["nr"])
        else:
            r = np.linspace(p["r_min"], p["r_max"], p["nr"])
        return r, 2 * np.pi * np.arange(p["ntheta"]) / p["ntheta"]

    def spacing(self) -> tuple[float, float]:
        if self.kind != "cartesian":
            raise GridError("uniform spacing is only defined for Cartesian grids")
        x, y = self.axes()
        return float(x[1] - x[0]), float(y[1] - y[0])

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """kx, ky arrays of ``self.shape``; axis 0 is x (or r), axis 1 is y (or theta)."""
        a, b = self.axes()
        A, B = np.meshgrid(a, b, indexing="ij")
        if self.kind == "cartesian":
            return A, B
        cx, cy = self.params["center"]
        return cx + A * np.cos(B), cy + A * np.sin(B)


@dataclass(frozen=True, eq=False)
class SampledField:
    grid: Grid2D
    values: np.ndarray
    name: str
    components: tuple = ()

    def __post_init__(self):
        if self.values.shape[:2] != self.grid.shape:
            raise GridError(f"field shape {self.values.shape} does not match grid {self.grid.shape}")

    @property
    def is_scalar(self) -> bool:
        return self.values.ndim == 2

    def flat_table(self) -> tuple[list[str], np.ndarray]:
        """Header and row-major table ``kx, ky, <components>``."""
        kx, ky = self.grid.points()
        vals = self.values.reshape(self.grid.size, -1)
        table = np.column_stack([kx.ravel(), ky.ravel(), vals])
        return ["kx", "ky", *self.components], table


def _components(quantity: str) -> tuple:
    if quantity in ("OmegaA", "OmegaN", "winding_field"):
        return tuple(f"{quantity}_{c}" for c in VECTOR_LABELS)
    if quantity in ("gN", "gA"):
        return tuple(f"{quantity}_{a}{b}" for a in VECTOR_LABELS for b in VECTOR_LABELS)
    return (quantity,)


def winding_field_arrays(d: np.ndarray, jac: np.ndarray) -> np.ndarray:
    """grad theta with tan(theta) = d_y/d_x, returned as a 3-vector with zero z."""
    rho2 = d[..., 0] ** 2 + d[..., 1] ** 2
    if np.any(rho2 < NODE_GUARD**2):
        raise NodeProximityError("in-plane |d| below the node guard; the winding angle is undefined there")
    w = np.zeros(d.shape)
    w[..., :2] = (d[..., 0, None] * jac[..., 1, :] - d[..., 1, None] * jac[..., 0, :]) / rho2[..., None]
    return w


def evaluate_quantity(model: DVectorModel, kx, ky, quantity: str, band: int = 1) -> np.ndarray:
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}; expected one of {QUANTITIES}")
    d = model.d(kx, ky)
    check_node_guard(d, kx, ky)
    jac = model.jacobian(kx, ky)
    if quantity == "winding_field":
        return winding_field_arrays(d, jac)
    if quantity == "berry_curvature_xy":
        return berry_curvature_xy_arrays(d, jac, band)
    return getattr(closed_form_arrays(d, jac, band), quantity)


def sample_field(model: DVectorModel, grid: Grid2D, quantity: str, band: int = 1, workers=None) -> SampledField:
    kx, ky = grid.points()
    fx, fy = kx.ravel(), ky.ravel()

    def work(sl):
        return evaluate_quantity(model, fx[sl], fy[sl], quantity, band)

    parts = map_ordered(work, chunk_slices(fx.size), workers)
    values = np.concatenate(parts, axis=0)
    return SampledField(grid, values.reshape(grid.shape + values.shape[1:]), quantity, _components(quantity))


# ---------------------------------------------------------------------------
# Hodge star and discrete vector calculus


def hodge_star(v) -> np.ndarray:
    """z-hat x (v_x, v_y) = (-v_y, v_x), a +90 degree rotation of the in-plane part."""
    v = np.asarray(v, float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def dual_check(model: DVectorModel, grid: Grid2D) -> dict:
    """Max over the grid of |OmegaA_xy - (*w)/2| for a planar model."""
    kx, ky = grid.points()
    d = model.d(kx, ky)
    check_node_guard(d, kx, ky)
    dz = np.abs(d[..., 2])
    if np.any(dz > 1e-14 * np.linalg.norm(d, axis=-1)):
        raise PlanarityError(f"d_z is nonzero on the grid (max |d_z| = {dz.max():.3g}); Hodge duality needs d_z = 0")
    omega_a = evaluate_quantity(model, kx, ky, "OmegaA")
    w = winding_field_arrays(d, model.jacobian(kx, ky))
    dev = np.linalg.norm(omega_a[..., :2] - 0.5 * hodge_star(w), axis=-1)
    idx = np.unravel_index(np.argmax(dev), dev.shape)
    return {
        "max_deviation": float(dev[idx]),
        "at_k": [float(kx[idx]), float(ky[idx])],
        "nodes": int(dev.size),
        "omega_a_z_max": float(np.abs(omega_a[..., 2]).max()),
    }


def _check_differentiable(f: SampledField):
    if f.grid.kind != "cartesian":
        raise GridError("divergence/curl need a Cartesian grid")
    if min(f.grid.shape) < 3:
        raise GridError(f"need >= 3 nodes per axis for second-order differences, got {f.grid.shape}")
    if f.values.ndim != 3 or f.values.shape[-1] < 2:
        raise GridError("divergence/curl need a vector field")


def divergence(f: SampledField) -> SampledField:
    _check_differentiable(f)
    hx, hy = f.grid.spacing()
    div = np.gradient(f.values[..., 0], hx, axis=0, edge_order=2) + np.gradient(
        f.values[..., 1], hy, axis=1, edge_order=2
    )
    return SampledField(f.grid, div, f"div_{f.name}", (f"div_{f.name}",))


def curl_z(f: SampledField) -> SampledField:
    _check_differentiable(f)
    hx, hy = f.grid.spacing()
    curl = np.gradient(f.values[..., 1], hx, axis=0, edge_order=2) - np.gradient(
        f.values[..., 0], hy, axis=1, edge_order=2
    )
    return SampledField(f.grid, curl, f"curl_{f.name}", (f"curl_{f.name}",))


def pointwise_div_curl(model: DVectorModel, kx, ky, quantity: str, h: float = 1e-5):
    """Reference divergence and z-curl of a sampled quantity by tight central differences."""
    fxp = evaluate_quantity(model, kx + h, ky, quantity)
    fxm = evaluate_quantity(model, kx - h, ky, quantity)
    fyp = evaluate_quantity(model, kx, ky + h, quantity)
    fym = evaluate_quantity(model, kx, ky - h, quantity)
    dx = (fxp - fxm) / (2 * h)
    dy = (fyp - fym) / (2 * h)
    return dx[..., 0] + dy[..., 1], dx[..., 1] - dy[..., 0]


# ---------------------------------------------------------------------------
# contours


@dataclass(frozen=True, eq=False)
class Contour:
    """Closed, counterclockwise curve in k-space.

    ``points`` are the ordered loop samples (first not repeated) and ``dl``
    the matching trapezoid line-element vectors, so that the circulation of
    f is ``sum(f(points) . dl)`` and the outward flux uses ``dl`` rotated by
    -90 degrees.
    """

    kind: str
    params: dict
    points: np.ndarray
    dl: np.ndarray
    midpoints: np.ndarray

    @property
    def samples(self) -> int:
        return len(self.points)

    @property
    def normal_dl(self) -> np.ndarray:
        return np.stack([self.dl[:, 1], -self.dl[:, 0]], axis=-1)

    @classmethod
    def circle(cls, center=(0.0, 0.0), radius: float = 1.0, samples: int = DEFAULT_CONTOUR_SAMPLES) -> "Contour":
        if samples < MIN_CONTOUR_SAMPLES:
            raise ContourError(f"contour needs >= {MIN_CONTOUR_SAMPLES} samples, got {samples}")
        if not radius > 0:
            raise ContourError(f"circle radius must be positive, got {radius}")
        c = np.asarray(center, float)
        th = 2 * np.pi * np.arange(samples) / samples
        mid = th + np.pi / samples
        unit = np.stack([np.cos(th), np.sin(th)], axis=-1)
        pts = c + radius * unit
        dl = radius * hodge_star(unit) * (2 * np.pi / samples)
        mids = c + radius * np.stack([np.cos(mid), np.sin(mid)], axis=-1)
        params = {"center": [float(c[0]), float(c[1])], "radius": float(radius)}
        return cls("circle", params, pts, dl, mids)

    @classmethod
    def polyline(cls, vertices, samples: int = DEFAULT_CONTOUR_SAMPLES) -> "Contour":
        """``vertices`` must close explicitly (last point equal to the first)."""
        v = np.asarray(vertices, float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 4:
            raise ContourError("polyline needs at least three distinct vertices plus the closing point")
        if not np.allclose(v[0], v[-1], rtol=0, atol=1e-12):
            raise ContourError("open contour: the last vertex must repeat the first")
        if samples < MIN_CONTOUR_SAMPLES:
            raise ContourError(f"contour needs >= {MIN_CONTOUR_SAMPLES} samples, got {samples}")
        v = v[:-1]
        nxt = np.roll(v, -1, axis=0)
        area = 0.5 * np.sum(v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1])
        if area <= 0:
            raise ContourError("polyline must be positively (counterclockwise) oriented")
        seg = nxt - v
        lengths = np.linalg.norm(seg, axis=1)
        counts = np.maximum(1, np.round(samples * lengths / lengths.sum()).astype(int))
        pts, dl, mids = [], [], []
        for a, s, n, s_prev, n_prev in zip(v, seg, counts, np.roll(seg, 1, axis=0), np.roll(counts, 1)):
            t = np.arange(n) / n
            p = a + t[:, None] * s
            w = np.tile(s / n, (n, 1))
            # vertex node: half of each adjacent segment's end weight
            w[0] = 0.5 * s / n + 0.5 * s_prev / n_prev
            pts.append(p)
            dl.append(w)
            mids.append(a + (t + 0.5 / n)[:, None] * s)
        params = {"vertices": np.vstack([v, v[:1]]).tolist()}
        return cls("polyline", params, np.vstack(pts), np.vstack(dl), np.vstack(mids))

    @classmethod
    def from_dict(cls, spec: dict) -> "Contour":
        spec = dict(spec)
        kind = spec.pop("kind", "circle")
        if kind == "circle":
            return cls.circle(**spec)
        if kind == "polyline":
            return cls.polyline(**spec)
        raise ContourError(f"unknown contour kind {kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params, "samples": self.samples}

    def area_rule(self):
        """Points and weights integrating over the enclosed region."""
        if self.kind == "circle":
            pts, w = disk_rule(self.params["radius"], self.samples)
            return np.asarray(self.params["center"]) + pts, w
        v = np.asarray(self.params["vertices"])[:-1]
        return fan_rule(v, v.mean(axis=0))


def contour_flux(model: DVectorModel, contour: Contour, quantity: str = "OmegaA") -> float:
    """Outward flux of OmegaA, or the tangential circulation of the winding field."""
    if not isinstance(contour, Contour):
        raise ContourError("contour_flux needs a closed Contour")
    kx, ky = contour.points[:, 0], contour.points[:, 1]
    if quantity == "OmegaA":
        vals = evaluate_quantity(model, kx, ky, "OmegaA")[:, :2]
        return float(np.sum(vals * contour.normal_dl))
    if quantity == "winding_field":
        vals = evaluate_quantity(model, kx, ky, "winding_field")[:, :2]
        return float(np.sum(vals * contour.dl))
    raise ValueError(f"contour_flux quantity must be 'OmegaA' or 'winding_field', got {quantity!r}")


def _wrap(x):
    return (x + np.pi) % (2 * np.pi) - np.pi


def winding_number(model: DVectorModel, contour: Contour) -> tuple[float, float]:
    """Accumulated d-vector angle around the contour over 2 pi, and the largest step."""
    d = model.d(contour.points[:, 0], contour.points[:, 1])
    dm = model.d(contour.midpoints[:, 0], contour.midpoints[:, 1])
    for arr, pts in ((d, contour.points), (dm, contour.midpoints)):
        check_node_guard(arr, pts[:, 0], pts[:, 1])
    theta = np.arctan2(d[:, 1], d[:, 0])
    theta_mid = np.arctan2(dm[:, 1], dm[:, 0])
    # each step is resolved through its midpoint, so a true jump above pi is visible
    steps = _wrap(theta_mid - theta) + _wrap(np.roll(theta, -1) - theta_mid)
    max_step = float(np.abs(steps).max())
    if max_step > np.pi:
        raise UndersampledContourError(
            f"winding angle jumps by {max_step:.3f} rad between adjacent samples (> pi); increase contour samples"
        )
    return float(np.sum(steps) / (2 * np.pi)), max_step


@dataclass
class TopologicalCharges:
    Q: float
    C_w: int
    berry_flux: float
    contour: Contour
    model_params: dict
    band: int = 1
    C_w_raw: float = 0.0
    flux: float = 0.0
    berry_flux_target: Optional[float] = None
    berry_flux_disk_exact: Optional[float] = None
    residuals: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "Q": self.Q,
            "C_w": self.C_w,
            "berry_flux": self.berry_flux,
            "residuals": self.residuals,
            "contour": self.contour.to_dict(),
            "model": self.model_params,
            "band": self.band,
            "C_w_raw": self.C_w_raw,
            "OmegaA_flux": self.flux,
            "berry_flux_target": self.berry_flux_target,
            "berry_flux_disk_exact": self.berry_flux_disk_exact,
        }


GAUSS_FLUX = -math.pi


def berry_flux(model: DVectorModel, contour: Contour, band: int = 1) -> tuple[float, int]:
    """Area integral of Omega_xy over the enclosed region.

    Quadrature nodes closer than the node guard to a node are dropped; their
    count is returned with the value.
    """
    pts, w = contour.area_rule()
    d = model.d(pts[:, 0], pts[:, 1])
    keep = np.linalg.norm(d, axis=-1) >= NODE_GUARD
    omega = berry_curvature_xy_arrays(d[keep], model.jacobian(pts[keep, 0], pts[keep, 1]), band)
    return float(np.sum(omega * w[keep])), int((~keep).sum())


def topological_charges(model: DVectorModel, contour: Contour, band: int = 1) -> TopologicalCharges:
    flux = contour_flux(model, contour, "OmegaA")
    Q = flux / GAUSS_FLUX
    cw_raw, max_step = winding_number(model, contour)
    cw = int(round(cw_raw))
    bflux, dropped = berry_flux(model, contour, band)
    target = exact = None
    if isinstance(model, MassiveDirac):
        target = -band * math.pi * float(np.sign(model.m))
        if contour.kind == "circle" and np.allclose(contour.params["center"], 0.0):
            R, m = contour.params["radius"], model.m
            exact = target * (1 - abs(m) / math.hypot(R, m))
    return TopologicalCharges(
        Q=Q,
        C_w=cw,
        berry_flux=bflux,
        contour=contour,
        model_params=model.to_dict(),
        band=band,
        C_w_raw=cw_raw,
        flux=flux,
        berry_flux_target=target,
        berry_flux_disk_exact=exact,
        residuals={
            "Q": abs(Q - round(Q)),
            "C_w": abs(cw_raw - cw),
            "max_theta_step": max_step,
            "berry_flux_dropped_nodes": dropped,
        },
    )



def hodge_residuals(model: DVectorModel, grid: Grid2D) -> tuple[float, float]:
    """Max deviations of the two 2D Hodge identities on a Cartesian grid.

    The left-hand sides (curl_z and divergence of OmegaA) are discrete; the
    right-hand sides (div and curl of the winding field) are pointwise
    references, so the residuals shrink at the finite-difference order.
    """
    omega_a = sample_field(model, grid, "OmegaA")
    kx, ky = grid.points()
    div_w, curl_w = pointwise_div_curl(model, kx, ky, "winding_field")
    r1 = np.abs(curl_z(omega_a).values - 0.5 * div_w).max()
    r2 = np.abs(divergence(omega_a).values + 0.5 * curl_w).max()
    return float(r1), float(r2)
