"""
Graded triangulations of the planar cusp {0 < x2 < 1, 0 < x1 < x2^γ1}.

Row j sits at x2 = (j/N)^κ and carries j+1 vertices spread evenly from the
straight side x1 = 0 to the curved side x1 = x2^γ1, so the tip is a
single vertex and the mesh has exactly N² triangles. γ1 = 1 gives the
reference triangle Ω_2 = {0 < x1 < x2 < 1}.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist

from .artifacts import atomic_write_text, format_float
from .cache import cached
from .validation import (
    DegenerateTriangle,
    InputValidator,
    NonfiniteIntegrand,
    ValidationError,
)

logger = logging.getLogger(__name__)

CUSP = "cusp"
REFERENCE = "reference"


@dataclass(frozen=True, eq=False)
class GradedMesh:
    """Vertices (V, 2), CCW triangles (T, 3) and the grading that produced them."""

    vertices: np.ndarray
    triangles: np.ndarray
    kappa: float
    N: int
    gamma1: float
    domain: str = CUSP

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(self.vertices, dtype=float)
        t = np.ascontiguousarray(self.triangles, dtype=np.int64)
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_triangles(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def areas(self) -> np.ndarray:
        return signed_areas(self.vertices, self.triangles)

    @property
    def polygon_area(self) -> float:
        return math.fsum(self.areas)

    @property
    def true_area(self) -> float:
        return 1.0 / (self.gamma1 + 1.0)

    def describe(self) -> Dict[str, object]:
        return {"gamma": self.gamma1, "N": self.N, "kappa": self.kappa}


def signed_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p0 = vertices[triangles[:, 0]]
    e1 = vertices[triangles[:, 1]] - p0
    e2 = vertices[triangles[:, 2]] - p0
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def build_cusp_mesh(gamma1: float, N: int, kappa: Optional[float] = None) -> GradedMesh:
    """
    Build the graded mesh of the cusp with N layers.

    Args:
        gamma1: cusp exponent γ1 ≥ 1
        N: number of layers (≥ 2)
        kappa: grading toward the tip, defaults to max(1, γ1)

    Raises:
        DegenerateTriangle: grading collapsed an element.
    """
    gamma1 = InputValidator.finite(gamma1, "gamma1")
    if gamma1 < 1:
        raise ValidationError(f"gamma1={gamma1} < 1", field="gamma1", value=gamma1,
                              suggestions=["Use gamma1 ≥ 1"])
    N = InputValidator.integer_at_least(N, 2, "N")
    kappa = max(1.0, gamma1) if kappa is None else InputValidator.finite(kappa, "kappa")
    if kappa < 1:
        raise ValidationError(f"kappa={kappa} < 1", field="kappa", value=kappa,
                              suggestions=["Use kappa ≥ 1 (1 = uniform layers)"])

    heights = (np.arange(N + 1) / N) ** kappa
    rows = []
    start = 0
    coords = []
    for j, y in enumerate(heights):
        width = y**gamma1
        if j == 0:
            xs = np.zeros(1)
        else:
            xs = np.arange(j + 1) / j * width
            xs[-1] = width
        coords.append(np.column_stack([xs, np.full(j + 1, y)]))
        rows.append(start)
        start += j + 1
    vertices = np.vstack(coords)

    tris = []
    for j in range(N):
        b0, t0 = rows[j], rows[j + 1]
        for i in range(j + 1):
            tris.append((b0 + i, t0 + i + 1, t0 + i))
            if i < j:
                tris.append((b0 + i, b0 + i + 1, t0 + i + 1))
    triangles = np.asarray(tris, dtype=np.int64)

    areas = signed_areas(vertices, triangles)
    if not np.all(areas > 0):
        k = int(np.argmin(areas))
        raise DegenerateTriangle(
            f"triangle {k} has area {areas[k]:.3g} (gamma1={gamma1}, N={N}, kappa={kappa})",
            suggestions=["Lower kappa or N; layers closer than machine precision collapse"],
        )
    domain = REFERENCE if gamma1 == 1.0 else CUSP
    mesh = GradedMesh(vertices, triangles, kappa=float(kappa), N=N, gamma1=gamma1, domain=domain)
    logger.debug("built %s mesh γ1=%g N=%d κ=%g: %d vertices", domain, gamma1, N, kappa, mesh.n_vertices)
    return mesh


def build_reference_mesh(N: int, kappa: float = 1.0) -> GradedMesh:
    """Mesh of Ω_2 = {0 < x1 < x2 < 1}."""
    return build_cusp_mesh(1.0, N, kappa)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Barycentric points (k, 3) and weights (k,) summing to one."""

    order: int
    barycentric: np.ndarray
    weights: np.ndarray

    @classmethod
    def of_order(cls, order: int = 2) -> "QuadratureRule":
        if order <= 1:
            return cls(1, np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0]))
        if order == 2:
            a, b = 2.0 / 3.0, 1.0 / 6.0
            pts = np.array([[a, b, b], [b, a, b], [b, b, a]])
            return cls(2, pts, np.full(3, 1.0 / 3.0))
        if order <= 4:
            # Dunavant, six points
            a1, w1 = 0.445948490915965, 0.223381589678011
            a2, w2 = 0.091576213509771, 0.109951743655322
            b1, b2 = 1.0 - 2.0 * a1, 1.0 - 2.0 * a2
            pts = np.array(
                [[b1, a1, a1], [a1, b1, a1], [a1, a1, b1], [b2, a2, a2], [a2, b2, a2], [a2, a2, b2]]
            )
            return cls(4, pts, np.array([w1, w1, w1, w2, w2, w2]))
        raise ValidationError(f"no quadrature rule of order {order}", field="order", value=order,
                              suggestions=["Use order 1, 2 or 4"])

    def physical(self, mesh: GradedMesh) -> Tuple[np.ndarray, np.ndarray]:
        """Points (T, k, 2) and weights (T, k) on every triangle."""
        corners = mesh.vertices[mesh.triangles]
        points = np.einsum("kc,tcd->tkd", self.barycentric, corners)
        weights = mesh.areas[:, None] * self.weights[None, :]
        return points, weights


def interpolation_matrix(mesh: GradedMesh, rule: QuadratureRule) -> sparse.csr_matrix:
    """P with (P u)[t·k + i] = u at quadrature point i of triangle t."""
    T, k = mesh.n_triangles, rule.weights.size
    rows = np.repeat(np.arange(T * k), 3)
    cols = np.repeat(mesh.triangles, k, axis=0).reshape(-1)
    vals = np.tile(rule.barycentric.reshape(-1), T)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(T * k, mesh.n_vertices))


def gradient_operators(mesh: GradedMesh) -> Tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """Gx, Gy of shape (T, V): the constant P1 gradient on each triangle."""
    v, t = mesh.vertices, mesh.triangles
    x, y = v[t, 0], v[t, 1]
    two_area = 2.0 * mesh.areas
    # ∇λ_i = (y_j − y_k, x_k − x_j) / 2|t| for cyclic (i, j, k)
    bx = np.column_stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]]) / two_area[:, None]
    by = np.column_stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]]) / two_area[:, None]
    rows = np.repeat(np.arange(mesh.n_triangles), 3)
    cols = t.reshape(-1)
    shape = (mesh.n_triangles, mesh.n_vertices)
    gx = sparse.csr_matrix((bx.reshape(-1), (rows, cols)), shape=shape)
    gy = sparse.csr_matrix((by.reshape(-1), (rows, cols)), shape=shape)
    return gx, gy


Integrand = Union[Callable[[np.ndarray, np.ndarray], np.ndarray], np.ndarray]


def integrate(mesh: GradedMesh, integrand: Integrand, rule: Optional[QuadratureRule] = None) -> float:
    """
    Quadrature sum of a closed-form integrand f(x1, x2) or of nodal values.

    Raises:
        NonfiniteIntegrand: f is inf or nan at some quadrature point.
    """
    rule = rule or QuadratureRule.of_order(2)
    points, weights = rule.physical(mesh)
    if callable(integrand):
        values = np.asarray(integrand(points[..., 0], points[..., 1]), dtype=float)
        values = np.broadcast_to(values, weights.shape)
    else:
        nodal = np.asarray(getattr(integrand, "values", integrand), dtype=float)
        if nodal.shape != (mesh.n_vertices,):
            raise ValidationError(
                f"expected {mesh.n_vertices} nodal values, got shape {nodal.shape}", field="integrand"
            )
        values = (interpolation_matrix(mesh, rule) @ nodal).reshape(weights.shape)
    values = InputValidator.finite_array(values, "integrand")
    # fixed summation order: per triangle, then across triangles
    return math.fsum(np.sum(weights * values, axis=1))


@dataclass(frozen=True)
class MeshQuality:
    min_angle: float
    max_aspect: float
    h_min: float
    h_max: float

    def to_dict(self) -> Dict[str, float]:
        return {"min_angle": self.min_angle, "max_aspect": self.max_aspect,
                "h_min": self.h_min, "h_max": self.h_max}


def mesh_quality(mesh: GradedMesh) -> MeshQuality:
    """Minimum angle (degrees), worst aspect ratio and edge-length range."""
    c = mesh.vertices[mesh.triangles]
    edges = np.stack([c[:, 1] - c[:, 0], c[:, 2] - c[:, 1], c[:, 0] - c[:, 2]], axis=1)
    lengths = np.linalg.norm(edges, axis=2)
    angles = []
    for i in range(3):
        u, w = -edges[:, (i + 2) % 3], edges[:, i]
        cos = np.sum(u * w, axis=1) / (lengths[:, (i + 2) % 3] * lengths[:, i])
        angles.append(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))))
    areas = mesh.areas
    inradius = 2.0 * areas / lengths.sum(axis=1)
    # 1 for the equilateral triangle
    aspect = lengths.max(axis=1) / (2.0 * math.sqrt(3.0) * inradius)
    return MeshQuality(
        min_angle=float(np.min(angles)),
        max_aspect=float(np.max(aspect)),
        h_min=float(lengths.min()),
        h_max=float(lengths.max()),
    )


def diameter(mesh: GradedMesh) -> float:
    """Largest vertex distance, taken over the convex hull."""
    hull = ConvexHull(mesh.vertices)
    return float(np.max(pdist(mesh.vertices[hull.vertices])))


def area_gap(mesh: GradedMesh) -> float:
    """Polygonal area minus the exact area 1/(γ1+1); zero for γ1 = 1."""
    return mesh.polygon_area - mesh.true_area


def boundary_edges(mesh: GradedMesh) -> np.ndarray:
    """Edges used by exactly one triangle; every other edge must be used twice."""
    t = mesh.triangles
    edges = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    unique, counts = np.unique(edges, axis=0, return_counts=True)
    if np.any(counts > 2):
        raise DegenerateTriangle("non-manifold edge shared by more than two triangles")
    return unique[counts == 1]


def mesh_text(mesh: GradedMesh) -> str:
    lines = [
        f"vertices {mesh.n_vertices} triangles {mesh.n_triangles} "
        f"gamma {format_float(mesh.gamma1)} kappa {format_float(mesh.kappa)}"
    ]
    lines.extend(f"{format_float(x)} {format_float(y)}" for x, y in mesh.vertices)
    lines.extend(f"{i} {j} {k}" for i, j, k in mesh.triangles)
    return "\n".join(lines) + "\n"


def write_mesh(mesh: GradedMesh, path: Union[str, Path]) -> Path:
    return atomic_write_text(path, mesh_text(mesh))


def read_mesh(path: Union[str, Path]) -> GradedMesh:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    head = lines[0].split()
    if len(head) != 8 or head[0::2] != ["vertices", "triangles", "gamma", "kappa"]:
        raise ValidationError(f"bad mesh header: {lines[0]!r}", field="mesh")
    nv, nt = int(head[1]), int(head[3])
    gamma1, kappa = float(head[5]), float(head[7])
    vertices = np.array([[float(s) for s in line.split()] for line in lines[1 : 1 + nv]])
    triangles = np.array([[int(s) for s in line.split()] for line in lines[1 + nv : 1 + nv + nt]],
                         dtype=np.int64)
    N = int(round(math.sqrt(nt)))
    domain = REFERENCE if gamma1 == 1.0 else CUSP
    return GradedMesh(vertices, triangles, kappa=kappa, N=N, gamma1=gamma1, domain=domain)


def write_nodal_values(values: np.ndarray, path: Union[str, Path]) -> Path:
    """Mesh-companion export: header ``nodal V`` then one value per line."""
    vals = np.asarray(getattr(values, "values", values), dtype=float)
    text = f"nodal {vals.size}\n" + "".join(f"{format_float(v)}\n" for v in vals)
    return atomic_write_text(path, text)


def read_nodal_values(path: Union[str, Path]) -> np.ndarray:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    head = lines[0].split()
    if len(head) != 2 or head[0] != "nodal":
        raise ValidationError(f"bad nodal header: {lines[0]!r}", field="nodal")
    count = int(head[1])
    return np.array([float(s) for s in lines[1 : 1 + count]])


@cached("mesh")
def cached_cusp_mesh(gamma1: float, N: int, kappa: Optional[float] = None) -> GradedMesh:
    """``build_cusp_mesh`` memoized in the process-wide cache; meshes are read-only."""
    return build_cusp_mesh(float(gamma1), int(N), None if kappa is None else float(kappa))
