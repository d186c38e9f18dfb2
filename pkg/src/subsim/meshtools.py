"""Triangle meshes with reproducible geometric distortion.

Two distortions are provided: midpoint subdivision (surface-preserving)
and bounded random vertex displacement controlled by an extent in
[0, 1]. Wavefront OBJ is the interchange format, with an optional
per-vertex RGB extension (``v x y z r g b``).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class MeshError(ValueError):
    """Invalid mesh data."""


class ObjParseError(MeshError):
    """Malformed OBJ file; message includes the line number."""


class TriMesh:
    """Indexed triangle mesh with optional per-vertex colors."""

    def __init__(self, vertices, triangles, colors=None):
        self.vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        if self.triangles.size:
            if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
                raise MeshError("triangle index out of range")
            a, b, c = self.triangles.T
            if np.any((a == b) | (b == c) | (a == c)):
                raise MeshError("degenerate triangle with repeated vertex index")
        if colors is not None:
            colors = np.asarray(colors, dtype=float).reshape(-1, 3)
            if len(colors) != len(self.vertices):
                raise MeshError("colors must match vertex count")
        self.colors = colors

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def bbox_diagonal(self) -> float:
        if not len(self.vertices):
            return 0.0
        span = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(np.linalg.norm(span))

    def surface_area(self) -> float:
        v = self.vertices
        t = self.triangles
        cross = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
        return float(0.5 * np.linalg.norm(cross, axis=1).sum())


@dataclass(frozen=True)
class DistortionParams:
    """Bounded-jitter parameters.

    ``scale`` is the displacement bound at extent 1; None defaults to 2%
    of the mesh bounding-box diagonal at application time.
    """

    extent: float
    scale: float | None = None
    seed: int = 0
    subdivision_levels: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.extent <= 1.0:
            raise MeshError(f"extent must be in [0, 1], got {self.extent}")
        if self.scale is not None and self.scale < 0.0:
            raise MeshError("scale must be >= 0")
        if self.subdivision_levels < 0:
            raise MeshError("subdivision_levels must be >= 0")


def subdivide(mesh: TriMesh) -> TriMesh:
    """Split every triangle into 4 at edge midpoints.

    Shared edges produce one shared midpoint vertex, so the subdivided
    surface is geometrically identical to the input.
    """
    verts = list(mesh.vertices)
    colors = list(mesh.colors) if mesh.colors is not None else None
    midpoint: dict[tuple[int, int], int] = {}

    def mid(a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        idx = midpoint.get(key)
        if idx is None:
            idx = len(verts)
            verts.append(0.5 * (mesh.vertices[a] + mesh.vertices[b]))
            if colors is not None:
                colors.append(0.5 * (mesh.colors[a] + mesh.colors[b]))
            midpoint[key] = idx
        return idx

    tris = []
    for a, b, c in mesh.triangles:
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        tris.extend([(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)])
    return TriMesh(np.array(verts), np.array(tris), np.array(colors) if colors is not None else None)


def jitter_vertices(mesh: TriMesh, params: DistortionParams) -> TriMesh:
    """Displace each vertex by an independent uniform vector bounded by
    extent*scale per axis. Connectivity is unchanged; deterministic for a
    fixed seed; extent 0 returns the input unchanged."""
    scale = params.scale if params.scale is not None else 0.02 * mesh.bbox_diagonal()
    bound = params.extent * scale
    if bound == 0.0:
        return TriMesh(mesh.vertices.copy(), mesh.triangles.copy(),
                       None if mesh.colors is None else mesh.colors.copy())
    rng = np.random.default_rng(params.seed)
    disp = rng.uniform(-bound, bound, size=mesh.vertices.shape)
    return TriMesh(mesh.vertices + disp, mesh.triangles.copy(),
                   None if mesh.colors is None else mesh.colors.copy())


def distort(mesh: TriMesh, params: DistortionParams) -> TriMesh:
    """Subdivide ``subdivision_levels`` times, then jitter."""
    out = mesh
    for _ in range(params.subdivision_levels):
        out = subdivide(out)
    return jitter_vertices(out, params)


def load_obj(path) -> TriMesh:
    """Read an OBJ file: v records (with optional r g b) and f records.

    Faces with more than three vertices are fan-triangulated. Texture and
    normal indices in ``f`` entries are ignored; indices must be positive.
    """
    path = Path(path)
    verts: list[list[float]] = []
    colors: list[list[float]] = []
    tris: list[tuple[int, int, int]] = []
    saw_color = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            tag = tokens[0]
            if tag == "v":
                if len(tokens) not in (4, 7):
                    raise ObjParseError(f"{path}:{lineno}: vertex needs 3 or 6 floats")
                try:
                    nums = [float(t) for t in tokens[1:]]
                except ValueError:
                    raise ObjParseError(f"{path}:{lineno}: bad vertex number") from None
                verts.append(nums[:3])
                if len(nums) == 6:
                    saw_color = True
                    colors.append(nums[3:])
                else:
                    colors.append([1.0, 1.0, 1.0])
            elif tag == "f":
                if len(tokens) < 4:
                    raise ObjParseError(f"{path}:{lineno}: face needs at least 3 vertices")
                idx = []
                for tok in tokens[1:]:
                    head = tok.split("/")[0]
                    try:
                        k = int(head)
                    except ValueError:
                        raise ObjParseError(f"{path}:{lineno}: bad face index {tok!r}") from None
                    if k <= 0:
                        raise ObjParseError(f"{path}:{lineno}: only positive indices supported")
                    if k > len(verts):
                        raise ObjParseError(f"{path}:{lineno}: face index {k} out of range")
                    idx.append(k - 1)
                for a, b in zip(idx[1:-1], idx[2:]):
                    tris.append((idx[0], a, b))
            # Other record types (vn, vt, o, g, usemtl, ...) are ignored.
    if not verts:
        raise ObjParseError(f"{path}: no vertices found")
    return TriMesh(np.array(verts), np.array(tris) if tris else np.zeros((0, 3), dtype=np.int64),
                   np.array(colors) if saw_color else None)


def save_obj(mesh: TriMesh, path) -> None:
    """Write an OBJ file; per-vertex colors use the x y z r g b extension.

    Float formatting is repr-based, so identical meshes produce
    byte-identical files.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for k, v in enumerate(mesh.vertices):
            if mesh.colors is not None:
                c = mesh.colors[k]
                fh.write(
                    "v "
                    + " ".join(repr(float(a)) for a in (v[0], v[1], v[2], c[0], c[1], c[2]))
                    + "\n"
                )
            else:
                fh.write("v " + " ".join(repr(float(a)) for a in v) + "\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def unit_tetrahedron() -> TriMesh:
    """Closed tetrahedron used by tests and docs."""
    verts = np.array(
        [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
    )
    tris = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    return TriMesh(verts, tris)
