"""Reconfigurable reflector arrays: steerable mirrors and metasurface patches.

A mirror element redirects the source specularly; its contribution at the
detector is modeled by the image of the source across the element plane, so
an element behaves like a copy of the source at the image point, attenuated
by the mirror reflectivity and gated by the element aperture (footprint).
A metasurface patch steers anomalously with a flat efficiency factor and no
aperture gating beyond front-side visibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .channel import shadowed, shadowed_mask
from .geometry import OrientedBox, Vec3, normalize

if TYPE_CHECKING:  # pragma: no cover
    from .scene import Luminaire, PhotoDetector

DEFAULT_MIRROR_REFLECTIVITY = 0.95
DEFAULT_MSA_EFFICIENCY = 0.8
MIRROR_WIDTH = 0.1  # meters, horizontal
MIRROR_HEIGHT = 0.06  # meters, vertical

_UP = np.array([0.0, 0.0, 1.0])
_X = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True)
class MirrorElement:
    """One small flat mirror; normal is its current orientation."""

    center: Vec3
    normal: Vec3
    width: float = MIRROR_WIDTH
    height: float = MIRROR_HEIGHT
    reflectivity: float = DEFAULT_MIRROR_REFLECTIVITY

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("mirror element dimensions must be positive")
        if not 0.0 <= self.reflectivity <= 1.0:
            raise ValueError(f"mirror reflectivity {self.reflectivity} outside [0, 1]")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "normal", normalize(np.asarray(self.normal, dtype=float)))


@dataclass(frozen=True)
class MetasurfacePatch:
    """One metasurface cell; the mounting normal stays fixed on the wall."""

    center: Vec3
    normal: Vec3
    area: float
    efficiency: float = DEFAULT_MSA_EFFICIENCY

    def __post_init__(self) -> None:
        if self.area <= 0:
            raise ValueError("patch area must be positive")
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"steering efficiency {self.efficiency} outside [0, 1]")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "normal", normalize(np.asarray(self.normal, dtype=float)))


class _ArrayBase:
    """Shared structure: an n x n grid of cells mounted flat on one wall."""

    def __init__(self, wall: str, base_normal: Vec3, n_per_side: int, cells: list):
        self.wall = wall
        self.base_normal = normalize(np.asarray(base_normal, dtype=float))
        self.n_per_side = int(n_per_side)
        self.cells = cells
        self._centers: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def centers(self) -> np.ndarray:
        """(n, 3) cell centers in row-major grid order; built lazily."""
        if self._centers is None:
            self._centers = np.array([c.center for c in self.cells], dtype=float)
        return self._centers


class MirrorArray(_ArrayBase):
    def __init__(self, wall: str, base_normal: Vec3, n_per_side: int,
                 elements: list[MirrorElement]):
        super().__init__(wall, base_normal, n_per_side, elements)
        self.reflectivity = elements[0].reflectivity if elements else DEFAULT_MIRROR_REFLECTIVITY

    @property
    def elements(self) -> list[MirrorElement]:
        return self.cells


class MetasurfaceArray(_ArrayBase):
    def __init__(self, wall: str, base_normal: Vec3, n_per_side: int,
                 patches: list[MetasurfacePatch]):
        super().__init__(wall, base_normal, n_per_side, patches)
        self.efficiency = patches[0].efficiency if patches else DEFAULT_MSA_EFFICIENCY

    @property
    def patches(self) -> list[MetasurfacePatch]:
        return self.cells


@dataclass(frozen=True)
class IrsChannelVector:
    """Per-cell cascaded gains for one array, plus the two leg lengths."""

    element_gains: np.ndarray  # row-major grid order
    ap_distances: np.ndarray
    ue_distances: np.ndarray

    def total(self) -> float:
        return math.fsum(self.element_gains.tolist())


def optimal_mirror_normal(src: Vec3, elem_center: Vec3, dst: Vec3) -> Vec3:
    """Orientation that reflects the ray src->element exactly onto dst.

    The half-vector of the two outward unit legs. Degenerate when src and dst
    sit exactly opposite each other through the element (no plane works).
    """
    u = np.asarray(src, dtype=float) - elem_center
    v = np.asarray(dst, dtype=float) - elem_center
    nu, nv = math.sqrt(float(u @ u)), math.sqrt(float(v @ v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("source or destination coincides with the element center")
    h = u / nu + v / nv
    hn = math.sqrt(float(h @ h))
    if hn < 1e-12:
        raise ValueError("degenerate geometry: source and destination are antipodal "
                         "through the element")
    return h / hn


def _plane_basis(n: Vec3) -> tuple[Vec3, Vec3]:
    """In-plane axes for a rectangle with normal n: e1 horizontal-ish, e2 = n x e1."""
    e1 = np.cross(_UP, n)
    if float(e1 @ e1) < 1e-18:
        e1 = np.cross(_X, n)
    e1 = normalize(e1)
    return e1, np.cross(n, e1)


def mirror_element_gain(ap: "Luminaire", elem: MirrorElement, ue: "PhotoDetector",
                        blockers: Sequence[OrientedBox] = (), *,
                        check_footprint: bool = True) -> float:
    """Cascaded gain of one mirror element at its current orientation.

    Image-source model: zero unless the source is on the element's front
    side, the ray from the source image to the detector passes through the
    element rectangle, the element sits inside the detector field of view,
    and both legs are unobstructed.
    """
    c = elem.center
    n = elem.normal
    s = ap.position - c
    sn = float(s @ n)
    if sn <= 0.0:  # source behind or on the mirror plane
        return 0.0
    d1 = math.sqrt(float(s @ s))
    cos_phi = float(-s @ ap.normal) / d1
    if cos_phi <= 0.0:
        return 0.0
    image = ap.position - 2.0 * sn * n

    v = ue.position - c
    d2 = math.sqrt(float(v @ v))
    if d2 == 0.0:
        raise ValueError("detector position coincides with the element center")
    cos_psi = float(-v @ ue.normal) / d2
    if cos_psi <= 0.0 or cos_psi < math.cos(ue.fov):
        return 0.0

    ray = ue.position - image
    dist_sq = float(ray @ ray)
    if dist_sq == 0.0:
        return 0.0
    if check_footprint:
        denom = float(ray @ n)
        if denom <= 0.0:  # ray runs along or away from the mirror plane
            return 0.0
        t = float((c - image) @ n) / denom
        if not 0.0 < t < 1.0:
            return 0.0
        hit = image + t * ray - c
        e1, e2 = _plane_basis(n)
        if abs(float(hit @ e1)) > elem.width / 2 or abs(float(hit @ e2)) > elem.height / 2:
            return 0.0
    if blockers and (shadowed(ap.position, c, blockers) or shadowed(c, ue.position, blockers)):
        return 0.0
    m = ap.lambertian_order
    return (elem.reflectivity * (m + 1.0) * ue.area / (2.0 * math.pi * dist_sq)
            * cos_phi ** m * cos_psi)


def _cascade_vector(ap: "Luminaire", centers: np.ndarray, ue: "PhotoDetector",
                    scale: float, extra_mask: np.ndarray | None,
                    blockers: Sequence[OrientedBox]) -> IrsChannelVector:
    """Common two-leg cascade: scale * (m+1) A / (2 pi (d1+d2)^2) cos^m(phi) cos(psi)."""
    u = ap.position - centers
    d1 = np.sqrt(np.einsum("ij,ij->i", u, u))
    v = ue.position - centers
    d2 = np.sqrt(np.einsum("ij,ij->i", v, v))
    cos_phi = (-u @ ap.normal) / d1
    cos_psi = (-v @ ue.normal) / d2
    ok = (cos_phi > 0.0) & (cos_psi > 0.0) & (cos_psi >= math.cos(ue.fov))
    if extra_mask is not None:
        ok &= extra_mask
    m = ap.lambertian_order
    total_d = d1 + d2
    gains = np.where(
        ok,
        scale * (m + 1.0) * ue.area / (2.0 * math.pi * total_d * total_d)
        * np.power(np.maximum(cos_phi, 0.0), m) * cos_psi,
        0.0,
    )
    idx = np.flatnonzero(gains > 0.0)
    if blockers and idx.size:
        pts = centers[idx]
        blocked = shadowed_mask(np.broadcast_to(ap.position, (idx.size, 3)), pts, blockers)
        blocked |= shadowed_mask(pts, np.broadcast_to(ue.position, (idx.size, 3)), blockers)
        gains[idx[blocked]] = 0.0
    return IrsChannelVector(gains, d1, d2)


def ma_channel_vector(ap: "Luminaire", array: MirrorArray, ue: "PhotoDetector",
                      blockers: Sequence[OrientedBox] = ()) -> IrsChannelVector:
    """Per-element gains with every mirror at its optimal orientation.

    With the half-vector orientation the image, element center and detector
    are collinear, so the image-detector distance is exactly d1 + d2 and the
    footprint is met at the element center; the front-side condition reduces
    to the legs not being exactly antipodal.
    """
    centers = array.centers
    u = ap.position - centers
    v = ue.position - centers
    d1 = np.sqrt(np.einsum("ij,ij->i", u, u))
    d2 = np.sqrt(np.einsum("ij,ij->i", v, v))
    cos_legs = np.einsum("ij,ij->i", u, v) / (d1 * d2)
    not_degenerate = cos_legs > -1.0 + 1e-12
    return _cascade_vector(ap, centers, ue, array.reflectivity, not_degenerate, blockers)


def ma_gain(ap: "Luminaire", array: MirrorArray, ue: "PhotoDetector",
            blockers: Sequence[OrientedBox] = ()) -> float:
    """Array gain with per-element optimal steering; compensated sum."""
    return ma_channel_vector(ap, array, ue, blockers).total()


def msa_channel_vector(ap: "Luminaire", array: MetasurfaceArray, ue: "PhotoDetector",
                       blockers: Sequence[OrientedBox] = ()) -> IrsChannelVector:
    """Per-patch anomalous-steering gains toward this detector."""
    centers = array.centers
    w = array.base_normal
    front = ((ap.position - centers) @ w > 0.0) & ((ue.position - centers) @ w > 0.0)
    return _cascade_vector(ap, centers, ue, array.efficiency, front, blockers)


def msa_gain(ap: "Luminaire", array: MetasurfaceArray, ue: "PhotoDetector",
             blockers: Sequence[OrientedBox] = ()) -> float:
    return msa_channel_vector(ap, array, ue, blockers).total()


@dataclass(frozen=True)
class MirrorAssignment:
    """Element-to-user mapping over one or more arrays, in global cell order."""

    element_ue: np.ndarray  # int index into the ue list per element
    per_ue_gains: tuple[float, ...]
    objective: str


def assign_mirrors_multi_ue(ap: "Luminaire", arrays: Sequence[MirrorArray],
                            ues: Sequence["PhotoDetector"],
                            blockers: Sequence[OrientedBox] = (),
                            objective: str = "max_sum") -> MirrorAssignment:
    """Partition mirror elements among several detectors.

    max_sum assigns each element to the detector it serves best, which is
    globally optimal because element contributions are independent. max_min
    greedily hands the best remaining element to the currently worst-served
    detector until none remain.
    """
    if not ues:
        raise ValueError("at least one detector is required")
    if objective not in ("max_sum", "max_min"):
        raise ValueError(f"unknown objective {objective!r}")
    gain_cols = []
    for ue in ues:
        per_array = [ma_channel_vector(ap, arr, ue, blockers).element_gains for arr in arrays]
        gain_cols.append(np.concatenate(per_array) if per_array else np.zeros(0))
    gains = np.stack(gain_cols, axis=1)  # (n_elements, n_ues)
    n_elem, n_ues = gains.shape

    if objective == "max_sum":
        element_ue = np.argmax(gains, axis=1)
    else:
        element_ue = np.full(n_elem, -1, dtype=int)
        running = np.zeros(n_ues)
        remaining = np.ones(n_elem, dtype=bool)
        for _ in range(n_elem):
            worst = int(np.argmin(running))
            col = np.where(remaining, gains[:, worst], -1.0)
            e = int(np.argmax(col))
            element_ue[e] = worst
            remaining[e] = False
            running[worst] += gains[e, worst]

    per_ue = tuple(
        math.fsum(gains[element_ue == u, u].tolist()) for u in range(n_ues)
    )
    return MirrorAssignment(element_ue, per_ue, objective)
