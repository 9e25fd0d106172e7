"""Deterministic software rasterizer for first-person frames.

Flat shading, one fixed directional light plus ambient, z-buffered
perspective projection of triangle meshes. No textures, shadows, or
anti-aliasing; identical inputs give byte-identical frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import Color, Pose, SceneSpec, Shape, Vec3
from .scene import RoomLayout

#: Object palette (0..255). Chosen so any two hues stay > 100 apart in L-inf
#: even at the darkest shading the light model produces.
OBJECT_COLORS: dict[Color, tuple[int, int, int]] = {
    Color.RED: (230, 40, 40),
    Color.GREEN: (30, 220, 30),
    Color.BLUE: (40, 60, 240),
    Color.YELLOW: (230, 225, 50),
    Color.BLACK: (12, 12, 12),
}

FLOOR_COLOR = (0.42, 0.41, 0.39)
CEILING_COLOR = (0.82, 0.82, 0.84)
WALL_COLOR = (0.70, 0.70, 0.73)
BACKGROUND = (0, 0, 0)  # never visible: the room encloses the camera

AMBIENT = 0.55
DIFFUSE = 0.45
_light = np.array([0.45, 1.0, 0.6])
LIGHT_DIR = _light / np.linalg.norm(_light)


@dataclass(frozen=True)
class CameraConfig:
    vfov_deg: float = 60.0
    near: float = 0.1
    far: float = 50.0
    height: float = 1.0

    def __post_init__(self) -> None:
        if not 30.0 < self.vfov_deg < 120.0:
            raise ValueError("vertical FOV must be in (30, 120) degrees")

    @property
    def fproj(self) -> float:
        return 1.0 / math.tan(math.radians(self.vfov_deg) / 2.0)


@dataclass(frozen=True)
class MeshConfig:
    sphere_rings: int = 8
    sphere_sectors: int = 12
    cylinder_sectors: int = 12
    capsule_rings: int = 3
    capsule_sectors: int = 12
    prism_sides: int = 3


# ---------------------------------------------------------------------------
# Meshes. Unit convention: each mesh fits in the [-0.5, 0.5]^3 box and is
# scaled by twice the object radius at placement time.


def mesh_for(shape: Shape, cfg: MeshConfig = MeshConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Closed triangle mesh (vertices (N,3) float64, triangles (M,3) int32)."""
    if shape is Shape.CUBE:
        return _box_mesh(1.0, 1.0, 1.0)
    if shape is Shape.SPHERE:
        return _sphere_mesh(0.5, cfg.sphere_rings, cfg.sphere_sectors)
    if shape is Shape.CYLINDER:
        return _cylinder_mesh(0.5, 1.0, cfg.cylinder_sectors)
    if shape is Shape.PRISM:
        return _prism_mesh(0.5, 1.0)
    if shape is Shape.CAPSULE:
        return _capsule_mesh(0.25, 1.0, cfg.capsule_rings, cfg.capsule_sectors)
    raise ValueError(f"unknown shape: {shape!r}")


def _box_mesh(sx: float, sy: float, sz: float) -> tuple[np.ndarray, np.ndarray]:
    hx, hy, hz = sx / 2.0, sy / 2.0, sz / 2.0
    verts = np.array(
        [
            (-hx, -hy, -hz), (hx, -hy, -hz), (hx, hy, -hz), (-hx, hy, -hz),
            (-hx, -hy, hz), (hx, -hy, hz), (hx, hy, hz), (-hx, hy, hz),
        ],
        dtype=np.float64,
    )
    tris = np.array(
        [
            (0, 1, 2), (0, 2, 3),  # -z
            (4, 6, 5), (4, 7, 6),  # +z
            (0, 4, 5), (0, 5, 1),  # -y
            (3, 2, 6), (3, 6, 7),  # +y
            (0, 3, 7), (0, 7, 4),  # -x
            (1, 5, 6), (1, 6, 2),  # +x
        ],
        dtype=np.int32,
    )
    return verts, tris


def _sphere_mesh(radius: float, rings: int, sectors: int) -> tuple[np.ndarray, np.ndarray]:
    """UV sphere: `rings` interior latitude rings plus two pole vertices.

    Triangle count is exactly 2 * rings * sectors (two pole fans plus
    rings-1 quad bands).
    """
    verts = [(0.0, radius, 0.0)]
    for i in range(1, rings + 1):
        phi = math.pi * i / (rings + 1)
        y = radius * math.cos(phi)
        r = radius * math.sin(phi)
        for j in range(sectors):
            theta = 2.0 * math.pi * j / sectors
            verts.append((r * math.cos(theta), y, r * math.sin(theta)))
    verts.append((0.0, -radius, 0.0))
    top, bottom = 0, len(verts) - 1

    def ring(i: int, j: int) -> int:
        return 1 + i * sectors + (j % sectors)

    tris = []
    for j in range(sectors):
        tris.append((top, ring(0, j + 1), ring(0, j)))
    for i in range(rings - 1):
        for j in range(sectors):
            a, b = ring(i, j), ring(i, j + 1)
            c, d = ring(i + 1, j), ring(i + 1, j + 1)
            tris.append((a, b, d))
            tris.append((a, d, c))
    for j in range(sectors):
        tris.append((bottom, ring(rings - 1, j), ring(rings - 1, j + 1)))
    return np.array(verts, dtype=np.float64), np.array(tris, dtype=np.int32)


def _cylinder_mesh(radius: float, height: float, sectors: int) -> tuple[np.ndarray, np.ndarray]:
    hy = height / 2.0
    verts = []
    for y in (hy, -hy):
        for j in range(sectors):
            theta = 2.0 * math.pi * j / sectors
            verts.append((radius * math.cos(theta), y, radius * math.sin(theta)))
    verts.append((0.0, hy, 0.0))
    verts.append((0.0, -hy, 0.0))
    top_c, bot_c = len(verts) - 2, len(verts) - 1
    tris = []
    for j in range(sectors):
        jn = (j + 1) % sectors
        tris.append((j, jn, sectors + jn))
        tris.append((j, sectors + jn, sectors + j))
        tris.append((top_c, jn, j))
        tris.append((bot_c, sectors + j, sectors + jn))
    return np.array(verts, dtype=np.float64), np.array(tris, dtype=np.int32)


def _prism_mesh(half_width: float, height: float) -> tuple[np.ndarray, np.ndarray]:
    """Upright triangular prism; equilateral cross-section in the ground plane."""
    hy = height / 2.0
    r = half_width
    base = []
    for k in range(3):
        theta = 2.0 * math.pi * k / 3.0 + math.pi / 2.0
        base.append((r * math.cos(theta), r * math.sin(theta)))
    verts = [(x, hy, z) for x, z in base] + [(x, -hy, z) for x, z in base]
    tris = [(0, 1, 2), (3, 5, 4)]
    for k in range(3):
        kn = (k + 1) % 3
        tris.append((k, kn + 3, k + 3))
        tris.append((k, kn, kn + 3))
    return np.array(verts, dtype=np.float64), np.array(tris, dtype=np.int32)


def _capsule_mesh(radius: float, height: float, rings: int, sectors: int) -> tuple[np.ndarray, np.ndarray]:
    """Cylinder with hemispherical caps; total height `height`."""
    cyl_h = height / 2.0 - radius  # half-height of the straight section
    verts = [(0.0, cyl_h + radius, 0.0)]
    ring_rows = []
    # Upper hemisphere rings (top to equator), equator rows shared with the tube.
    for i in range(1, rings + 1):
        phi = (math.pi / 2.0) * i / rings
        y = cyl_h + radius * math.cos(phi)
        r = radius * math.sin(phi)
        ring_rows.append((y, r))
    for i in range(rings, 0, -1):
        phi = (math.pi / 2.0) * i / rings
        y = -(cyl_h + radius * math.cos(phi))
        r = radius * math.sin(phi)
        ring_rows.append((y, r))
    for y, r in ring_rows:
        for j in range(sectors):
            theta = 2.0 * math.pi * j / sectors
            verts.append((r * math.cos(theta), y, r * math.sin(theta)))
    verts.append((0.0, -(cyl_h + radius), 0.0))
    top, bottom = 0, len(verts) - 1
    n_rows = len(ring_rows)

    def ring(i: int, j: int) -> int:
        return 1 + i * sectors + (j % sectors)

    tris = []
    for j in range(sectors):
        tris.append((top, ring(0, j + 1), ring(0, j)))
    for i in range(n_rows - 1):
        for j in range(sectors):
            a, b = ring(i, j), ring(i, j + 1)
            c, d = ring(i + 1, j), ring(i + 1, j + 1)
            tris.append((a, b, d))
            tris.append((a, d, c))
    for j in range(sectors):
        tris.append((bottom, ring(n_rows - 1, j), ring(n_rows - 1, j + 1)))
    return np.array(verts, dtype=np.float64), np.array(tris, dtype=np.int32)


def watertight(verts: np.ndarray, tris: np.ndarray) -> bool:
    """Every edge shared by exactly two triangles (closed 2-manifold check)."""
    edges: dict[tuple[int, int], int] = {}
    for a, b, c in tris:
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            edges[key] = edges.get(key, 0) + 1
    return all(n == 2 for n in edges.values())


# ---------------------------------------------------------------------------
# Scene geometry: triangles in world space with pre-shaded per-face colors.


@dataclass
class SceneGeometry:
    verts: np.ndarray  # (N, 3) float64, world space
    tris: np.ndarray  # (M, 3) int32
    colors_u8: np.ndarray  # (M, 3) uint8, flat-shaded


class _GeometryBuilder:
    def __init__(self) -> None:
        self.verts: list[np.ndarray] = []
        self.tris: list[np.ndarray] = []
        self.colors: list[np.ndarray] = []
        self._base = 0

    def add(self, verts: np.ndarray, tris: np.ndarray, color: tuple[float, float, float]) -> None:
        self.verts.append(verts)
        self.tris.append(tris + self._base)
        self.colors.append(np.tile(np.asarray(color, np.float64), (len(tris), 1)))
        self._base += len(verts)

    def finish(self) -> SceneGeometry:
        verts = np.concatenate(self.verts)
        tris = np.concatenate(self.tris).astype(np.int32)
        base = np.concatenate(self.colors)
        v0 = verts[tris[:, 0]]
        n = np.cross(verts[tris[:, 1]] - v0, verts[tris[:, 2]] - v0)
        norm = np.linalg.norm(n, axis=1)
        norm[norm == 0.0] = 1.0
        n /= norm[:, None]
        # Two-sided flat shading keeps the result independent of winding.
        intensity = AMBIENT + DIFFUSE * np.abs(n @ LIGHT_DIR)
        shaded = np.clip(np.rint(base * intensity[:, None] * 255.0), 0, 255)
        return SceneGeometry(verts, tris, shaded.astype(np.uint8))


def _add_box(builder: _GeometryBuilder, center: Vec3, size: Vec3, color) -> None:
    verts, tris = _box_mesh(*size)
    builder.add(verts + np.asarray(center, np.float64), tris, color)


def build_room_geometry(builder: _GeometryBuilder, layout: RoomLayout) -> None:
    w, d, h = layout.width, layout.depth, layout.height
    corners = np.array(
        [
            (0, 0, 0), (w, 0, 0), (w, 0, d), (0, 0, d),
            (0, h, 0), (w, h, 0), (w, h, d), (0, h, d),
        ],
        dtype=np.float64,
    )
    floor = np.array([(0, 1, 2), (0, 2, 3)], np.int32)
    ceiling = np.array([(4, 6, 5), (4, 7, 6)], np.int32)
    walls = np.array(
        [
            (0, 1, 5), (0, 5, 4),  # z = 0
            (2, 3, 7), (2, 7, 6),  # z = d
            (0, 4, 7), (0, 7, 3),  # x = 0
            (1, 2, 6), (1, 6, 5),  # x = w
        ],
        np.int32,
    )
    builder.add(corners, floor, FLOOR_COLOR)
    builder.add(corners, ceiling, CEILING_COLOR)
    builder.add(corners, walls, WALL_COLOR)
    for lm in layout.landmarks():
        _add_box(builder, lm.center, lm.size, lm.color)


def build_geometry(
    scene: SceneSpec,
    layout: RoomLayout,
    mesh_cfg: MeshConfig = MeshConfig(),
    object_radius: float = 0.25,
) -> SceneGeometry:
    builder = _GeometryBuilder()
    build_room_geometry(builder, layout)
    scale = 2.0 * object_radius
    meshes = {s: mesh_for(s, mesh_cfg) for s in Shape}
    for placed in scene.options:
        stack = [placed.group]
        while stack:
            group = stack.pop()
            if group.anchor is not None:
                stack.append(group.anchor)
            verts, tris = meshes[group.phrase.shape]
            rgb = OBJECT_COLORS[group.phrase.color]
            color = (rgb[0] / 255.0, rgb[1] / 255.0, rgb[2] / 255.0)
            for p in group.placements:
                builder.add(verts * scale + np.asarray(p, np.float64), tris, color)
    return builder.finish()


# ---------------------------------------------------------------------------
# Rendering.


def view_transform(verts: np.ndarray, pose: Pose, camera: CameraConfig) -> np.ndarray:
    """World -> camera space. Forward is (sin h, 0, cos h); y stays up."""
    x, _, z = pose.position
    eye = np.array([x, camera.height, z])
    sin_h, cos_h = math.sin(pose.heading), math.cos(pose.heading)
    rel = verts - eye
    cam = np.empty_like(rel)
    cam[:, 0] = rel[:, 0] * cos_h - rel[:, 2] * sin_h  # right
    cam[:, 1] = rel[:, 1]  # up
    cam[:, 2] = rel[:, 0] * sin_h + rel[:, 2] * cos_h  # forward
    return cam


def render(
    geometry: SceneGeometry,
    pose: Pose,
    camera: CameraConfig = CameraConfig(),
    size: int = 128,
    use_numba: bool | None = None,
) -> np.ndarray:
    """Rasterize one first-person frame; returns (3, size, size) uint8."""
    cam = view_transform(geometry.verts, pose, camera)
    return _kernels.render_triangles(
        cam,
        geometry.tris,
        geometry.colors_u8,
        size,
        size,
        camera.near,
        camera.far,
        camera.fproj,
        BACKGROUND,
        use_numba=use_numba,
    )


def render_scene(
    scene: SceneSpec,
    layout: RoomLayout,
    pose: Pose,
    camera: CameraConfig = CameraConfig(),
    size: int = 128,
    mesh_cfg: MeshConfig = MeshConfig(),
) -> np.ndarray:
    """Convenience one-shot render (builds geometry every call)."""
    return render(build_geometry(scene, layout, mesh_cfg), pose, camera, size)
