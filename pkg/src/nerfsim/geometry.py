"""Pinhole cameras, bounding-sphere ray casting, and overlap-based view selection.

Each camera's frustum is summarized by the points where a coarse grid of its
rays first hits a scene bounding sphere. Two views overlap strongly when each
view's hit points have close nearest neighbors among the other's; the mutual
cost is the symmetrized sum of squared nearest-neighbor distances, and
reference views are the ones with the smallest mutual cost to the target.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import ParameterError

DEFAULT_RAY_GRID = 16
MIN_SPHERE_RADIUS = 1e-3


@dataclass(frozen=True, eq=False)
class CameraView:
    """One pinhole camera: intrinsics in pixels, pose in world units.

    rotation maps camera coordinates to world coordinates (its columns are the
    camera's right / down / forward axes expressed in world space); translation
    is the camera center. A pixel (u, v) looks along
    rotation @ [(u - cx)/fx, (v - cy)/fy, 1].
    """

    id: int
    image_path: str
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray
    translation: np.ndarray
    near: float
    far: float

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.float64)
        trans = np.asarray(self.translation, dtype=np.float64)
        if rot.shape != (3, 3):
            raise ParameterError(f"rotation must be 3x3, got {rot.shape}")
        if trans.shape != (3,):
            raise ParameterError(f"translation must be a 3-vector, got {trans.shape}")
        if not np.all(np.isfinite(rot)) or not np.all(np.isfinite(trans)):
            raise ParameterError("pose contains non-finite values")
        if np.max(np.abs(rot @ rot.T - np.eye(3))) > 1e-6:
            raise ParameterError(f"rotation of view {self.id} is not orthonormal")
        if not (self.fx > 0 and self.fy > 0):
            raise ParameterError(f"focal lengths must be positive, got ({self.fx}, {self.fy})")
        if not self.near < self.far:
            raise ParameterError(f"need near < far, got ({self.near}, {self.far})")
        rot.setflags(write=False)
        trans.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    def optical_axis(self) -> np.ndarray:
        return self.rotation[:, 2].copy()

    def ray_directions(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Unit world-space directions through pixel coordinates (u, v)."""
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        d_cam = np.stack(
            [(u - self.cx) / self.fx, (v - self.cy) / self.fy, np.ones_like(u)], axis=-1
        )
        d_world = d_cam @ self.rotation.T
        return d_world / np.linalg.norm(d_world, axis=-1, keepdims=True)


@dataclass(frozen=True)
class SceneSphere:
    center: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ParameterError(f"sphere radius must be positive, got {self.radius}")

    @property
    def center_array(self) -> np.ndarray:
        return np.array(self.center, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class IntersectionSet:
    """Sphere-surface points hit by one view's ray grid."""

    view_id: int
    points: np.ndarray  # (M, 3)


@dataclass(frozen=True, eq=False)
class ViewMatchTable:
    """Directed and mutual matching costs over a scene's views.

    mutual[i, j] = directed[i, j] + directed[j, i]; symmetric with a zero
    diagonal by construction. Rows/columns are ordered as view_ids.
    """

    view_ids: tuple[int, ...]
    directed: np.ndarray
    mutual: np.ndarray

    def index_of(self, view_id: int) -> int:
        try:
            return self.view_ids.index(view_id)
        except ValueError:
            raise ParameterError(f"view id {view_id} not in table") from None

    def mutual_cost(self, i: int, j: int) -> float:
        return float(self.mutual[self.index_of(i), self.index_of(j)])


def estimate_scene_sphere(
    views: list[CameraView],
    center_override: tuple[float, float, float] | None = None,
    radius_override: float | None = None,
) -> SceneSphere:
    """Fit a coarse bounding sphere from the cameras' mid-depth points.

    Each view contributes the point on its optical axis at depth
    (near + far)/2; the sphere center is their mean and the radius is 0.75
    times the median distance to the center, floored at a small positive
    value. Either quantity can be overridden.
    """
    if len(views) < 2:
        raise ParameterError(f"need at least 2 views to estimate a sphere, got {len(views)}")
    mids = np.stack(
        [v.translation + v.optical_axis() * (0.5 * (v.near + v.far)) for v in views]
    )
    if center_override is not None:
        center = np.asarray(center_override, dtype=np.float64)
    else:
        center = mids.mean(axis=0)
    if radius_override is not None:
        radius = float(radius_override)
    else:
        dists = np.linalg.norm(mids - center, axis=1)
        radius = max(0.75 * float(np.median(dists)), MIN_SPHERE_RADIUS)
    return SceneSphere(tuple(float(c) for c in center), radius)


def shoot_intersections(
    view: CameraView, sphere: SceneSphere, grid: int = DEFAULT_RAY_GRID
) -> IntersectionSet:
    """Cast a grid x grid ray fan and keep the near sphere hits.

    Ray pixel coordinates are the centers of a uniform grid x grid partition
    of the image plane. Each ray keeps its first positive-depth intersection
    with the sphere; rays that miss contribute nothing, so the returned set
    holds at most grid^2 points. A camera inside the sphere keeps the single
    forward hit.
    """
    if grid < 2:
        raise ParameterError(f"ray grid must be at least 2, got {grid}")
    u = (np.arange(grid, dtype=np.float64) + 0.5) * (view.width / grid)
    v = (np.arange(grid, dtype=np.float64) + 0.5) * (view.height / grid)
    uu, vv = np.meshgrid(u, v, indexing="xy")
    dirs = view.ray_directions(uu.ravel(), vv.ravel())
    origin = view.translation

    # Ray-sphere quadratic with unit directions: t^2 + b t + c = 0.
    oc = origin - sphere.center_array
    b = 2.0 * dirs @ oc
    c = float(oc @ oc) - sphere.radius**2
    disc = b * b - 4.0 * c
    hit = disc >= 0.0
    sq = np.sqrt(np.where(hit, disc, 0.0))
    t_near = (-b - sq) / 2.0
    t_far = (-b + sq) / 2.0
    t = np.where(t_near > 0.0, t_near, t_far)
    keep = hit & (t > 0.0)
    points = origin + t[keep, None] * dirs[keep]
    return IntersectionSet(view.id, points)


def directed_cost(a: IntersectionSet, b: IntersectionSet, backend: str = "auto") -> float:
    """Sum of squared distances from each point of `a` to its nearest in `b`.

    Both backends are exact: "brute" does the full pairwise scan; "kdtree"
    finds the nearest index with a k-d tree and recomputes the squared
    distance with the same arithmetic as the scan, so results agree
    point-for-point.
    """
    if a.points.shape[0] == 0 or b.points.shape[0] == 0:
        raise ParameterError(
            f"matching cost undefined for empty intersection set "
            f"(views {a.view_id} -> {b.view_id})"
        )
    if backend not in ("auto", "brute", "kdtree"):
        raise ParameterError(f"unknown nearest-neighbor backend {backend!r}")
    if backend == "brute":
        d2 = nearest_squared_distances_brute(a.points, b.points)
    else:
        idx = cKDTree(b.points).query(a.points, k=1)[1]
        d2 = np.sum((a.points - b.points[idx]) ** 2, axis=1)
    return float(np.sum(d2))


def nearest_squared_distances_brute(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-point squared distance from rows of a to their nearest row of b."""
    diff = a[:, None, :] - b[None, :, :]
    d2 = np.sum(diff**2, axis=2)
    idx = np.argmin(d2, axis=1)
    # recompute from the matched pair so the arithmetic matches the indexed path
    return np.sum((a - b[idx]) ** 2, axis=1)


def mutual_cost_table(sets: list[IntersectionSet], backend: str = "auto") -> ViewMatchTable:
    """All-pairs directed costs plus their symmetrized mutual sums."""
    n = len(sets)
    for s in sets:
        if s.points.shape[0] == 0:
            raise ParameterError(f"view {s.view_id} has an empty intersection set")
    directed = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(n):
            if i != j:
                directed[i, j] = directed_cost(sets[i], sets[j], backend)
    mutual = directed + directed.T
    return ViewMatchTable(tuple(s.view_id for s in sets), directed, mutual)


def select_references(table: ViewMatchTable, target: int, k: int = 2) -> list[int]:
    """Pick the k views with the smallest mutual cost to the target.

    The target itself is excluded; ties go to the smaller view id. The result
    is ordered by (cost, id).
    """
    n = len(table.view_ids)
    if k >= n:
        raise ParameterError(f"cannot select {k} references from {n} views")
    if k < 1:
        raise ParameterError(f"k must be at least 1, got {k}")
    ti = table.index_of(target)
    ranked = sorted(
        (
            (float(table.mutual[ti, j]), table.view_ids[j])
            for j in range(n)
            if j != ti
        ),
    )
    return [vid for _, vid in ranked[:k]]


def score_scene(
    views: list[CameraView],
    grid: int = DEFAULT_RAY_GRID,
    sphere: SceneSphere | None = None,
    backend: str = "auto",
) -> ViewMatchTable:
    """Estimate the sphere (unless given), cast all views, build the cost table."""
    if sphere is None:
        sphere = estimate_scene_sphere(views)
    sets = [shoot_intersections(v, sphere, grid) for v in views]
    return mutual_cost_table(sets, backend)


def load_scene(path: str) -> list[CameraView]:
    """Read a scene JSON document into camera views."""
    with open(path) as f:
        doc = json.load(f)
    if not isinstance(doc, dict) or "views" not in doc:
        raise ParameterError(f"{path}: scene file must be an object with a 'views' list")
    views = []
    for raw in doc["views"]:
        try:
            views.append(
                CameraView(
                    id=int(raw["id"]),
                    image_path=str(raw["file"]),
                    width=int(raw["width"]),
                    height=int(raw["height"]),
                    fx=float(raw["fx"]),
                    fy=float(raw["fy"]),
                    cx=float(raw["cx"]),
                    cy=float(raw["cy"]),
                    rotation=np.array(raw["R"], dtype=np.float64).reshape(3, 3),
                    translation=np.array(raw["t"], dtype=np.float64),
                    near=float(raw["near"]),
                    far=float(raw["far"]),
                )
            )
        except KeyError as e:
            raise ParameterError(f"{path}: view entry missing field {e}") from None
    ids = [v.id for v in views]
    if len(set(ids)) != len(ids):
        raise ParameterError(f"{path}: duplicate view ids")
    return views


def save_scene(views: list[CameraView], path: str) -> None:
    doc = {
        "views": [
            {
                "id": v.id,
                "file": v.image_path,
                "width": v.width,
                "height": v.height,
                "fx": v.fx,
                "fy": v.fy,
                "cx": v.cx,
                "cy": v.cy,
                "R": [float(x) for x in v.rotation.ravel()],
                "t": [float(x) for x in v.translation],
                "near": v.near,
                "far": v.far,
            }
            for v in views
        ]
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")
