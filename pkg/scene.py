#!/usr/bin/env python
''' Scene geometry for traversability mapping: load reconstructed meshes and
    point clouds, generate synthetic test rooms out of boxes and arches,
    voxelize triangle surfaces into occupancy grids, and sample ground-truth
    surface clouds.
'''

__author__ = "hatnav developers"
__commands__ = []

import argparse, logging, math, os, os.path
import numpy as np
import util.cmd, util.file

log = logging.getLogger(__name__)

# points within this distance below a voxel face belong to the upper voxel
VOXEL_EPS = 1e-9

DEFAULT_RESOLUTION = 0.05
DEFAULT_FLOOR_THICKNESS = 0.0125


class ParseError(Exception):
    def __init__(self, line, reason):
        super(ParseError, self).__init__(
            "line {}: {}".format(line, reason) if line is not None else reason)
        self.line = line
        self.reason = reason

class EmptyMesh(Exception):
    pass

class InvalidSpec(Exception):
    pass

class InvalidResolution(Exception):
    pass

class DegenerateBounds(Exception):
    pass


# =========================
# ***  geometry types  ***
# =========================

class TriMesh(object):
    ''' Triangle mesh: vertices (n,3) in meters and faces (m,3) of 0-based
        vertex indices.
    '''
    def __init__(self, vertices, faces):
        self.vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
        self.faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        if len(self.faces):
            if self.faces.min() < 0 or self.faces.max() >= len(self.vertices):
                raise ValueError("face index out of range")
            f = self.faces
            if np.any((f[:,0]==f[:,1]) | (f[:,1]==f[:,2]) | (f[:,0]==f[:,2])):
                raise ValueError("face references the same vertex twice")

    def __len__(self):
        return len(self.faces)

    def aabb(self):
        if not len(self.vertices):
            raise EmptyMesh("mesh has no vertices")
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def triangles(self):
        return self.vertices[self.faces]

    def areas(self):
        t = self.triangles()
        return 0.5 * np.linalg.norm(np.cross(t[:,1]-t[:,0], t[:,2]-t[:,0]), axis=1)

    @staticmethod
    def concatenate(meshes):
        verts, faces, offset = [], [], 0
        for m in meshes:
            verts.append(m.vertices)
            faces.append(m.faces + offset)
            offset += len(m.vertices)
        if not verts:
            return TriMesh(np.zeros((0,3)), np.zeros((0,3), dtype=np.int64))
        return TriMesh(np.concatenate(verts), np.concatenate(faces))


class PointCloud(object):
    def __init__(self, points):
        self.points = np.asarray(points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(self.points)):
            raise ValueError("point cloud has non-finite coordinates")

    def __len__(self):
        return len(self.points)


def rle_encode(flags):
    ''' Run lengths of a boolean sequence, alternating False/True and
        starting with a (possibly zero) False run.
    '''
    flags = np.asarray(flags, dtype=bool).ravel()
    if not flags.size:
        return []
    change = np.flatnonzero(flags[1:] != flags[:-1]) + 1
    runs = np.diff(np.concatenate(([0], change, [flags.size])))
    if flags[0]:
        runs = np.concatenate(([0], runs))
    return [int(r) for r in runs]

def rle_decode(runs, size):
    runs = np.asarray(runs, dtype=np.int64)
    if np.any(runs < 0):
        raise ValueError("negative run length")
    flags = np.repeat(np.arange(len(runs)) % 2 == 1, runs)
    if flags.size != size:
        raise ValueError("run lengths cover {} cells, expected {}".format(flags.size, size))
    return flags


class VoxelGrid(object):
    ''' Dense boolean occupancy volume. Voxel (i,j,k) covers
        [origin + idx*res, origin + (idx+1)*res) on each axis.
        occupancy is indexed [ix, iy, iz].
    '''
    def __init__(self, origin, resolution, dims, occupancy=None):
        resolution = float(resolution)
        if not (math.isfinite(resolution) and resolution > 0):
            raise InvalidResolution("resolution must be > 0: {}".format(resolution))
        dims = tuple(int(d) for d in dims)
        if len(dims) != 3 or min(dims) < 1:
            raise DegenerateBounds("grid dims must be positive: {}".format(dims))
        self.origin = np.asarray(origin, dtype=float).reshape(3)
        self.resolution = resolution
        self.dims = dims
        if occupancy is None:
            occupancy = np.zeros(dims, dtype=bool)
        occupancy = np.asarray(occupancy, dtype=bool)
        if occupancy.size != np.prod(dims):
            raise ValueError("occupancy has {} cells, dims {} need {}".format(
                occupancy.size, dims, int(np.prod(dims))))
        self.occupancy = occupancy.reshape(dims)

    @classmethod
    def from_bounds(cls, lo, hi, resolution):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if not (math.isfinite(resolution) and resolution > 0):
            raise InvalidResolution("resolution must be > 0: {}".format(resolution))
        if lo.shape != (3,) or hi.shape != (3,) or np.any(hi <= lo):
            raise DegenerateBounds("bounds must have max > min on every axis")
        dims = np.maximum(1, np.ceil((hi - lo) / resolution - VOXEL_EPS)).astype(int)
        return cls(lo, resolution, dims)

    def bounds(self):
        return self.origin.copy(), self.origin + np.asarray(self.dims) * self.resolution

    def world_to_index(self, points):
        points = np.asarray(points, dtype=float)
        return np.floor((points - self.origin + VOXEL_EPS) / self.resolution).astype(np.int64)

    def index_to_world(self, idx):
        return self.origin + (np.asarray(idx, dtype=float) + 0.5) * self.resolution

    def in_bounds(self, idx):
        idx = np.asarray(idx)
        return np.all((idx >= 0) & (idx < np.asarray(self.dims)), axis=-1)

    def z_centers(self):
        return self.origin[2] + (np.arange(self.dims[2]) + 0.5) * self.resolution

    def mark(self, points):
        ''' Set the voxels containing the given points; points outside the
            grid are ignored. Returns the number of points that landed.
        '''
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        idx = self.world_to_index(points)
        keep = self.in_bounds(idx)
        idx = idx[keep]
        self.occupancy[idx[:,0], idx[:,1], idx[:,2]] = True
        return int(keep.sum())

    def occupied_centers(self):
        return self.index_to_world(np.argwhere(self.occupancy))

    def count(self):
        return int(self.occupancy.sum())

    def to_dict(self):
        return {'origin': self.origin.tolist(),
                'resolution': self.resolution,
                'dims': list(self.dims),
                'occupancy': rle_encode(self.occupancy.ravel())}

    @classmethod
    def from_dict(cls, d):
        dims = tuple(d['dims'])
        occ = rle_decode(d['occupancy'], int(np.prod(dims)))
        return cls(d['origin'], d['resolution'], dims, occ)


def read_grid(inFile):
    return VoxelGrid.from_dict(util.file.read_json(inFile))

def write_grid(grid, outFile):
    util.file.write_json(grid.to_dict(), outFile)


# =========================
# ***  mesh file I/O  ***
# =========================

def _obj_index(tok, n_seen, lineno):
    try:
        i = int(tok.split('/')[0])
    except ValueError:
        raise ParseError(lineno, "bad face index {!r}".format(tok))
    if i == 0:
        raise ParseError(lineno, "face index 0 is not valid in OBJ")
    # negative indices are relative to the vertices read so far
    return i - 1 if i > 0 else n_seen + i

def _parse_obj(inf):
    verts, faces = [], []
    for lineno, line in enumerate(inf, 1):
        parts = line.split()
        if not parts or parts[0].startswith('#'):
            continue
        if parts[0] == 'v':
            if len(parts) < 4:
                raise ParseError(lineno, "vertex needs three coordinates")
            try:
                xyz = [float(x) for x in parts[1:4]]
            except ValueError:
                raise ParseError(lineno, "bad vertex coordinate")
            if not all(map(math.isfinite, xyz)):
                raise ParseError(lineno, "non-finite vertex coordinate")
            verts.append(xyz)
        elif parts[0] == 'f':
            if len(parts) < 4:
                raise ParseError(lineno, "face needs at least three vertices")
            idx = [_obj_index(tok, len(verts), lineno) for tok in parts[1:]]
            if len(set(idx)) != len(idx):
                raise ParseError(lineno, "face references the same vertex twice")
            faces.append((lineno, idx))
    tris = []
    for lineno, idx in faces:
        for i in idx:
            if i < 0 or i >= len(verts):
                raise ParseError(lineno, "face index {} out of range ({} vertices)".format(i+1, len(verts)))
        for k in range(1, len(idx)-1):
            tris.append((idx[0], idx[k], idx[k+1]))
    return verts, tris

def _read_ply(inFile):
    ''' Parse an ASCII PLY into {element name: list of token lists} plus the
        property names of each element.
    '''
    with open(inFile, 'rb') as inf:
        lines = inf.read().split(b'\n')
    if not lines or lines[0].strip() != b'ply':
        raise ParseError(1, "missing 'ply' magic")
    elements = []
    lineno = 1
    while True:
        if lineno >= len(lines):
            raise ParseError(lineno, "header has no end_header")
        try:
            parts = lines[lineno].decode('ascii').split()
        except UnicodeDecodeError:
            raise ParseError(lineno+1, "non-ASCII header")
        lineno += 1
        if not parts or parts[0] in ('comment', 'obj_info'):
            continue
        if parts[0] == 'format':
            if len(parts) < 2 or parts[1] != 'ascii':
                raise ParseError(lineno, "only ASCII PLY is supported, got {}".format(' '.join(parts[1:])))
        elif parts[0] == 'element':
            if len(parts) != 3:
                raise ParseError(lineno, "malformed element line")
            try:
                elements.append((parts[1], int(parts[2]), []))
            except ValueError:
                raise ParseError(lineno, "bad element count")
        elif parts[0] == 'property':
            if not elements:
                raise ParseError(lineno, "property before any element")
            elements[-1][2].append(parts[-1])
        elif parts[0] == 'end_header':
            break
        else:
            raise ParseError(lineno, "unknown header keyword {!r}".format(parts[0]))

    data, props = {}, {}
    for name, count, prop_names in elements:
        rows = []
        while len(rows) < count:
            if lineno >= len(lines):
                raise ParseError(lineno, "expected {} {} records, got {}".format(count, name, len(rows)))
            try:
                parts = lines[lineno].decode('ascii').split()
            except UnicodeDecodeError:
                raise ParseError(lineno+1, "non-ASCII body")
            lineno += 1
            if parts:
                rows.append((lineno, parts))
        data[name] = rows
        props[name] = prop_names
    return data, props

def _ply_vertices(data, props):
    names = props.get('vertex', [])
    try:
        cols = [names.index(a) for a in ('x', 'y', 'z')]
    except ValueError:
        raise ParseError(None, "vertex element lacks x/y/z properties")
    verts = []
    for lineno, parts in data.get('vertex', []):
        try:
            xyz = [float(parts[c]) for c in cols]
        except (ValueError, IndexError):
            raise ParseError(lineno, "bad vertex record")
        if not all(map(math.isfinite, xyz)):
            raise ParseError(lineno, "non-finite vertex coordinate")
        verts.append(xyz)
    return verts

def load_mesh(inFile):
    ''' Read an ASCII OBJ or ASCII PLY triangle mesh. Polygons are
        fan-triangulated.
    '''
    if not os.path.isfile(inFile):
        raise FileNotFoundError(inFile)
    with open(inFile, 'rb') as inf:
        is_ply = inf.read(3) == b'ply'
    if is_ply:
        data, props = _read_ply(inFile)
        verts = _ply_vertices(data, props)
        tris = []
        for lineno, parts in data.get('face', []):
            try:
                n = int(parts[0])
                idx = [int(x) for x in parts[1:1+n]]
            except (ValueError, IndexError):
                raise ParseError(lineno, "bad face record")
            if n < 3 or len(idx) != n:
                raise ParseError(lineno, "face needs at least three vertices")
            for i in idx:
                if i < 0 or i >= len(verts):
                    raise ParseError(lineno, "face index {} out of range ({} vertices)".format(i, len(verts)))
            if len(set(idx)) != n:
                raise ParseError(lineno, "face references the same vertex twice")
            for k in range(1, n-1):
                tris.append((idx[0], idx[k], idx[k+1]))
    else:
        with open(inFile, 'rt') as inf:
            verts, tris = _parse_obj(inf)
    if not tris:
        raise EmptyMesh("{} has no faces".format(inFile))
    log.debug("loaded %s: %d vertices, %d triangles", inFile, len(verts), len(tris))
    return TriMesh(verts, tris)

def save_obj(mesh, outFile):
    with open(outFile, 'wt') as outf:
        for v in mesh.vertices:
            outf.write('v {!r} {!r} {!r}\n'.format(*map(float, v)))
        for f in mesh.faces:
            outf.write('f {} {} {}\n'.format(*(int(i)+1 for i in f)))

def load_point_cloud(inFile):
    ''' Read the vertex element of an ASCII PLY as a point cloud. '''
    if not os.path.isfile(inFile):
        raise FileNotFoundError(inFile)
    data, props = _read_ply(inFile)
    return PointCloud(_ply_vertices(data, props))

def save_point_cloud(cloud, outFile):
    with open(outFile, 'wt') as outf:
        outf.write('ply\nformat ascii 1.0\n')
        outf.write('element vertex {}\n'.format(len(cloud)))
        outf.write('property double x\nproperty double y\nproperty double z\n')
        outf.write('end_header\n')
        for p in cloud.points:
            outf.write('{!r} {!r} {!r}\n'.format(*map(float, p)))


# =========================
# ***  scene generation  ***
# =========================

# quads of each box face, as (x,y,z) corner bits, wound so normals point out
BOX_QUADS = (
    ((0,0,0), (0,0,1), (0,1,1), (0,1,0)),
    ((1,0,0), (1,1,0), (1,1,1), (1,0,1)),
    ((0,0,0), (1,0,0), (1,0,1), (0,0,1)),
    ((0,1,0), (0,1,1), (1,1,1), (1,1,0)),
    ((0,0,0), (0,1,0), (1,1,0), (1,0,0)),
    ((0,0,1), (1,0,1), (1,1,1), (0,1,1)),
)

def box_mesh(lo, hi):
    ''' Closed box as 12 outward-facing triangles. '''
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    corners = np.array([[(lo, hi)[i][0], (lo, hi)[j][1], (lo, hi)[k][2]]
        for i in (0,1) for j in (0,1) for k in (0,1)])
    faces = []
    for quad in BOX_QUADS:
        a, b, c, d = (i*4 + j*2 + k for i,j,k in quad)
        faces.append((a, b, c))
        faces.append((a, c, d))
    return TriMesh(corners, faces)

def _positive(prim, key, default=None):
    if key not in prim:
        if default is None:
            raise InvalidSpec("{} primitive missing {!r}".format(prim.get('type'), key))
        return default
    try:
        v = float(prim[key])
    except (TypeError, ValueError):
        raise InvalidSpec("{}.{} is not a number".format(prim.get('type'), key))
    if not (math.isfinite(v) and v > 0):
        raise InvalidSpec("{}.{} must be > 0, got {}".format(prim.get('type'), key, v))
    return v

def _point(prim, key, n, default=None):
    v = prim.get(key, default)
    if v is None:
        raise InvalidSpec("{} primitive missing {!r}".format(prim.get('type'), key))
    try:
        v = [float(x) for x in v]
    except (TypeError, ValueError):
        raise InvalidSpec("{}.{} is not a list of numbers".format(prim.get('type'), key))
    if len(v) != n or not all(map(math.isfinite, v)):
        raise InvalidSpec("{}.{} needs {} finite coordinates".format(prim.get('type'), key, n))
    return np.array(v)

def _floor_boxes(prim):
    width = _positive(prim, 'width')
    depth = _positive(prim, 'depth')
    thickness = _positive(prim, 'thickness', DEFAULT_FLOOR_THICKNESS)
    if 'center' in prim:
        c = _point(prim, 'center', 2)
        x0, y0 = c[0] - width/2, c[1] - depth/2
    else:
        x0, y0 = 0.0, 0.0
    return [((x0, y0, -thickness), (x0+width, y0+depth, 0.0))]

def _box_boxes(prim):
    c = _point(prim, 'center', 3)
    ext = _point(prim, 'extents', 3)
    if np.any(ext <= 0):
        raise InvalidSpec("box extents must be > 0, got {}".format(ext.tolist()))
    return [(tuple(c - ext/2), tuple(c + ext/2))]

def _arch_boxes(prim):
    ''' Two pillars and a lintel. axis is the passage direction; the frame
        spans across it.
    '''
    c = _point(prim, 'center', 2)
    span = _positive(prim, 'span')
    pillar = _positive(prim, 'pillar_width')
    clearance = _positive(prim, 'clearance')
    depth = _positive(prim, 'depth')
    base = float(prim.get('base', 0.0))
    if 'height' in prim:
        height = _positive(prim, 'height')
        if clearance >= height:
            raise InvalidSpec("arch clearance {} must be below its height {}".format(clearance, height))
        lintel = height - clearance
    else:
        lintel = _positive(prim, 'lintel_thickness')
    axis = prim.get('axis', 'x')
    if axis not in ('x', 'y'):
        raise InvalidSpec("arch axis must be 'x' or 'y', got {!r}".format(axis))

    # (along passage, across passage) intervals, swapped into x/y below
    along = (c[0 if axis=='x' else 1] - depth/2, c[0 if axis=='x' else 1] + depth/2)
    mid = c[1 if axis=='x' else 0]
    half = span/2
    across = [(mid - half - pillar, mid - half),
              (mid + half, mid + half + pillar),
              (mid - half - pillar, mid + half + pillar)]
    zs = [(base, base+clearance), (base, base+clearance),
          (base+clearance, base+clearance+lintel)]
    out = []
    for (a0, a1), (z0, z1) in zip(across, zs):
        if axis == 'x':
            out.append(((along[0], a0, z0), (along[1], a1, z1)))
        else:
            out.append(((a0, along[0], z0), (a1, along[1], z1)))
    return out

PRIMITIVES = {'floor': _floor_boxes, 'box': _box_boxes, 'arch': _arch_boxes}

def scene_boxes(spec):
    ''' Expand a scene spec into a list of (lo, hi) boxes. '''
    if isinstance(spec, dict):
        prims = spec.get('primitives')
        if prims is None:
            raise InvalidSpec("scene spec has no 'primitives' list")
    else:
        prims = spec
    boxes = []
    for prim in prims:
        if not isinstance(prim, dict) or prim.get('type') not in PRIMITIVES:
            raise InvalidSpec("unknown primitive {!r}".format(prim))
        boxes.extend(PRIMITIVES[prim['type']](prim))
    return boxes

def gen_scene(spec):
    ''' Build a triangle mesh from a scene spec. Floors put their top face
        at z=0; every primitive is a set of closed boxes.
    '''
    boxes = scene_boxes(spec)
    if not boxes:
        raise EmptyMesh("scene spec has no primitives")
    mesh = TriMesh.concatenate([box_mesh(lo, hi) for lo, hi in boxes])
    log.debug("generated scene with %d boxes, %d triangles", len(boxes), len(mesh))
    return mesh


# =========================
# ***  voxelization  ***
# =========================

def _lattice(n):
    ''' Barycentric weights of the n-subdivision lattice of a triangle. '''
    i, j = np.meshgrid(np.arange(n+1), np.arange(n+1), indexing='ij')
    keep = i + j <= n
    i, j = i[keep], j[keep]
    return np.stack([n - i - j, i, j], axis=1).astype(float) / n

def surface_lattice_points(mesh, spacing, max_points=2000000):
    ''' Yield chunks of points covering every triangle at the given spacing,
        including all edges and vertices.
    '''
    tris = mesh.triangles()
    if not len(tris):
        return
    edges = np.stack([tris[:,1]-tris[:,0], tris[:,2]-tris[:,1], tris[:,0]-tris[:,2]], axis=1)
    longest = np.linalg.norm(edges, axis=2).max(axis=1)
    n = np.maximum(1, np.ceil(longest / spacing)).astype(np.int64)
    for nval in np.unique(n):
        sel = tris[n == nval]
        bary = _lattice(int(nval))
        per_chunk = max(1, max_points // len(bary))
        for start in range(0, len(sel), per_chunk):
            chunk = sel[start:start+per_chunk]
            yield np.einsum('kv,tvd->tkd', bary, chunk).reshape(-1, 3)

def voxelize(mesh, resolution=DEFAULT_RESOLUTION, bounds=None, spacing=None):
    ''' Surface voxelization: mark every voxel hit by a dense barycentric
        sampling of each triangle (spacing resolution/5 by default) plus the
        voxels of all vertices. Default bounds are the mesh AABB padded by
        one voxel.
    '''
    if not (math.isfinite(resolution) and resolution > 0):
        raise InvalidResolution("resolution must be > 0: {}".format(resolution))
    if not len(mesh):
        raise EmptyMesh("cannot voxelize a mesh with no faces")
    if bounds is None:
        lo, hi = mesh.aabb()
        lo, hi = lo - resolution, hi + resolution
    else:
        lo, hi = bounds
    grid = VoxelGrid.from_bounds(lo, hi, resolution)
    spacing = spacing or resolution / 5.0
    if spacing > resolution / 2:
        raise InvalidResolution("sample spacing {} exceeds half the resolution".format(spacing))
    for pts in surface_lattice_points(mesh, spacing):
        grid.mark(pts)
    grid.mark(mesh.vertices)
    log.info("voxelized %d triangles into %s grid at %g m: %d occupied",
        len(mesh), 'x'.join(map(str, grid.dims)), resolution, grid.count())
    return grid

def voxelize_points(cloud, resolution, bounds=None):
    ''' Occupancy grid of the voxels containing the cloud's points. '''
    if not (math.isfinite(resolution) and resolution > 0):
        raise InvalidResolution("resolution must be > 0: {}".format(resolution))
    if not len(cloud):
        raise EmptyMesh("cannot voxelize an empty point cloud")
    if bounds is None:
        lo = cloud.points.min(axis=0) - resolution
        hi = cloud.points.max(axis=0) + resolution
    else:
        lo, hi = bounds
    grid = VoxelGrid.from_bounds(lo, hi, resolution)
    grid.mark(cloud.points)
    return grid


def sample_surface(mesh, density, seed=0):
    ''' Area-weighted uniform surface sample with round(area*density) points. '''
    if not (density > 0):
        raise ValueError("density must be > 0")
    if not len(mesh):
        raise EmptyMesh("cannot sample a mesh with no faces")
    areas = mesh.areas()
    total = float(areas.sum())
    if total <= 0:
        raise EmptyMesh("mesh has zero surface area")
    count = int(round(total * density))
    rng = np.random.default_rng(seed)
    tri = rng.choice(len(areas), size=count, p=areas/total)
    r1 = np.sqrt(rng.random(count))
    r2 = rng.random(count)
    t = mesh.triangles()[tri]
    pts = ((1-r1)[:,None]*t[:,0] + (r1*(1-r2))[:,None]*t[:,1] + (r1*r2)[:,None]*t[:,2])
    log.debug("sampled %d surface points over %.4f m^2", count, total)
    return PointCloud(pts)


# =========================
# ***  commands  ***
# =========================

def parse_bounds(s):
    ''' "xmin,ymin,zmin,xmax,ymax,zmax" -> (lo, hi) '''
    vals = [float(x) for x in s.split(',')]
    if len(vals) != 6:
        raise argparse.ArgumentTypeError("bounds need six comma-separated numbers")
    return (np.array(vals[:3]), np.array(vals[3:]))

def gen_scene_file(inSpec, outMesh):
    ''' Generate a synthetic scene mesh (OBJ) from a JSON scene spec. '''
    spec = util.file.read_json(inSpec)
    save_obj(gen_scene(spec), outMesh)
    return 0
def parser_gen(parser=argparse.ArgumentParser()):
    parser.add_argument('inSpec', help='Input scene spec (JSON with a "primitives" list).')
    parser.add_argument('outMesh', help='Output mesh (OBJ).')
    util.cmd.common_args(parser, (('loglevel',None), ('version',None)))
    util.cmd.attach_main(parser, gen_scene_file, split_args=True)
    return parser
__commands__.append(('gen', parser_gen))

def voxelize_file(inMesh, outGrid, resolution=DEFAULT_RESOLUTION, bounds=None):
    ''' Voxelize the surface of an OBJ/PLY mesh into an occupancy grid (JSON). '''
    grid = voxelize(load_mesh(inMesh), resolution, bounds=bounds)
    write_grid(grid, outGrid)
    return 0
def parser_voxelize(parser=argparse.ArgumentParser()):
    parser.add_argument('inMesh', help='Input mesh (ASCII OBJ or PLY).')
    parser.add_argument('outGrid', help='Output voxel grid (JSON).')
    parser.add_argument('--resolution', type=float, default=DEFAULT_RESOLUTION,
        help='Voxel edge length in meters. [default: %(default)s]')
    parser.add_argument('--bounds', type=parse_bounds, default=None,
        help='Grid bounds xmin,ymin,zmin,xmax,ymax,zmax. [default: mesh AABB padded by one voxel]')
    util.cmd.common_args(parser, (('loglevel',None), ('version',None)))
    util.cmd.attach_main(parser, voxelize_file, split_args=True)
    return parser
__commands__.append(('voxelize', parser_voxelize))

def sample_surface_file(inMesh, outCloud, density=1000.0, seed=0):
    ''' Sample points uniformly over a mesh surface and write them as ASCII PLY. '''
    save_point_cloud(sample_surface(load_mesh(inMesh), density, seed), outCloud)
    return 0
def parser_sample_surface(parser=argparse.ArgumentParser()):
    parser.add_argument('inMesh', help='Input mesh (ASCII OBJ or PLY).')
    parser.add_argument('outCloud', help='Output point cloud (ASCII PLY).')
    parser.add_argument('--density', type=float, default=1000.0,
        help='Points per square meter. [default: %(default)s]')
    util.cmd.common_args(parser, (('loglevel',None), ('seed',None), ('version',None)))
    util.cmd.attach_main(parser, sample_surface_file, split_args=True)
    return parser
__commands__.append(('sample_surface', parser_sample_surface))


def full_parser():
    return util.cmd.make_parser(__commands__, __doc__)
if __name__ == '__main__':
    util.cmd.main_argparse(__commands__, __doc__)
