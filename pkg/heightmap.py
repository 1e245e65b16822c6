#!/usr/bin/env python
''' Height-segmented traversability maps. The floor plane is estimated from
    a voxel grid, then every (x,y) column is classified by whether a legged
    robot passes at full body height (FREE), by lowering its body (DUCK), or
    not at all (BLOCKED).
'''

__author__ = "hatnav developers"
__commands__ = []

import argparse, logging, math
from dataclasses import dataclass, asdict, fields
from enum import IntEnum
import numpy as np
import scipy.ndimage
import util.cmd, util.file, util.misc
import scene

log = logging.getLogger(__name__)

TOL = 1e-9

MODE_HAT = 'hat'
MODE_FLAT2D = 'flat2d'
MODES = (MODE_HAT, MODE_FLAT2D)


class EmptyGrid(Exception):
    pass

class NonUniformSpacing(Exception):
    pass

class InvalidProfile(Exception):
    pass


class CellClass(IntEnum):
    FREE = 0
    DUCK = 1
    BLOCKED = 2

# raster colours per class code
CLASS_COLORS = np.array([(0, 170, 0), (240, 200, 0), (0, 0, 0)], dtype=np.uint8)


def dataclass_from_dict(cls, d, error=ValueError):
    ''' Build a dataclass from a JSON dict, rejecting unknown keys. '''
    d = dict(d)
    d.pop('schema_version', None)
    names = set(f.name for f in fields(cls))
    unknown = sorted(set(d) - names)
    if unknown:
        raise error("unknown {} keys: {}".format(cls.__name__, ', '.join(unknown)))
    return cls(**d)


@dataclass(frozen=True)
class RobotProfile:
    ''' Geometric capability envelope of the robot, in meters. '''
    h_max: float = 0.30
    h_min: float = 0.15
    step_max: float = 0.08
    footprint_radius: float = 0.15
    safety_margin: float = 0.02

    def __post_init__(self):
        if not (0 < self.h_min <= self.h_max):
            raise InvalidProfile("need 0 < h_min <= h_max, got {} and {}".format(self.h_min, self.h_max))
        if not (0 <= self.step_max < self.h_min):
            raise InvalidProfile("need 0 <= step_max < h_min, got {}".format(self.step_max))
        if not (self.footprint_radius > 0):
            raise InvalidProfile("footprint_radius must be > 0")
        if not (self.safety_margin >= 0):
            raise InvalidProfile("safety_margin must be >= 0")

    @classmethod
    def from_dict(cls, d):
        return dataclass_from_dict(cls, d, InvalidProfile)

    def to_dict(self):
        return asdict(self)

def read_profile(inFile=None):
    if inFile is None:
        return RobotProfile()
    return RobotProfile.from_dict(util.file.read_json(inFile))


@dataclass(frozen=True)
class CellAnalysis:
    support_height: float
    clearance: float
    cell_class: CellClass
    required_height: float


class TraversabilityGrid(object):
    ''' 2D grid of per-cell passability. Arrays are indexed [ix, iy]; cell
        (ix, iy) covers [origin + i*res, origin + (i+1)*res) on each axis.
        clearance is inf where nothing overhangs; required is NaN for
        BLOCKED cells.
    '''
    def __init__(self, origin, resolution, floor_z, classes, support, clearance, required):
        self.origin = np.asarray(origin, dtype=float).reshape(2)
        self.resolution = float(resolution)
        self.floor_z = float(floor_z)
        self.classes = np.asarray(classes, dtype=np.int8)
        self.dims = self.classes.shape
        self.support = np.asarray(support, dtype=float).reshape(self.dims)
        self.clearance = np.asarray(clearance, dtype=float).reshape(self.dims)
        self.required = np.asarray(required, dtype=float).reshape(self.dims)
        if len(self.dims) != 2 or min(self.dims) < 1:
            raise ValueError("traversability grid needs two positive dims, got {}".format(self.dims))
        if not math.isfinite(self.floor_z):
            raise ValueError("floor_z must be finite")

    def copy(self):
        return TraversabilityGrid(self.origin, self.resolution, self.floor_z,
            self.classes.copy(), self.support.copy(), self.clearance.copy(), self.required.copy())

    def world_rect(self):
        hi = self.origin + np.asarray(self.dims) * self.resolution
        return (self.origin[0], self.origin[1], hi[0], hi[1])

    def cells_of(self, points):
        points = np.asarray(points, dtype=float)
        return np.floor((points - self.origin + TOL) / self.resolution).astype(np.int64)

    def cell_of(self, x, y):
        ix, iy = self.cells_of([x, y])
        return int(ix), int(iy)

    def in_bounds(self, cells):
        cells = np.asarray(cells)
        return np.all((cells >= 0) & (cells < np.asarray(self.dims)), axis=-1)

    def cell_center(self, ix, iy):
        return self.origin + (np.array([ix, iy], dtype=float) + 0.5) * self.resolution

    def cell_centers(self):
        ''' (nx*ny, 2) centres in C order over (ix, iy). '''
        ix, iy = np.meshgrid(np.arange(self.dims[0]), np.arange(self.dims[1]), indexing='ij')
        return self.origin + (np.stack([ix.ravel(), iy.ravel()], axis=1) + 0.5) * self.resolution

    def cell(self, ix, iy):
        return CellAnalysis(float(self.support[ix, iy]), float(self.clearance[ix, iy]),
            CellClass(int(self.classes[ix, iy])), float(self.required[ix, iy]))

    def passable(self, mode):
        if mode == MODE_HAT:
            return self.classes != CellClass.BLOCKED
        if mode == MODE_FLAT2D:
            return self.classes == CellClass.FREE
        raise ValueError("unknown planning mode {!r}".format(mode))

    def lookup(self, points):
        ''' Class, required height and clearance under each point; points
            off the grid read as BLOCKED.
        '''
        cells = self.cells_of(points)
        inside = self.in_bounds(cells)
        c = np.where(inside[:,None], cells, 0)
        cls = np.where(inside, self.classes[c[:,0], c[:,1]], CellClass.BLOCKED)
        req = np.where(inside, self.required[c[:,0], c[:,1]], np.nan)
        clr = np.where(inside, self.clearance[c[:,0], c[:,1]], 0.0)
        return cls, req, clr

    def points_passable(self, points, mode):
        cls, _, _ = self.lookup(points)
        if mode == MODE_HAT:
            return cls != CellClass.BLOCKED
        return cls == CellClass.FREE

    def class_counts(self):
        return dict((c.name, int((self.classes == c).sum())) for c in CellClass)

    def to_dict(self):
        cells = [[int(k), s, c, r] for k, s, c, r in zip(self.classes.ravel().tolist(),
            self.support.ravel().tolist(), self.clearance.ravel().tolist(), self.required.ravel().tolist())]
        return {'origin': self.origin.tolist(), 'resolution': self.resolution,
            'dims': list(self.dims), 'floor_z': self.floor_z, 'cells': cells}

    @classmethod
    def from_dict(cls, d):
        dims = tuple(d['dims'])
        cells = d['cells']
        if len(cells) != dims[0]*dims[1]:
            raise ValueError("expected {} cells, got {}".format(dims[0]*dims[1], len(cells)))
        classes = np.array([c[0] for c in cells], dtype=np.int8).reshape(dims)
        support = np.array([c[1] for c in cells], dtype=float).reshape(dims)
        clearance = np.array([util.file.none_to_inf(c[2]) for c in cells], dtype=float).reshape(dims)
        required = np.array([util.file.none_to_inf(c[3], math.nan) for c in cells], dtype=float).reshape(dims)
        return cls(d['origin'], d['resolution'], d['floor_z'], classes, support, clearance, required)

    def to_rgb(self):
        ''' Class colours as an image with +y up. '''
        return CLASS_COLORS[self.classes.T[::-1]]

def read_tgrid(inFile):
    return TraversabilityGrid.from_dict(util.file.read_json(inFile))

def write_tgrid(tgrid, outFile):
    util.file.write_json(tgrid.to_dict(), outFile)


# =========================
# ***  floor estimate  ***
# =========================

def estimate_floor(grid):
    ''' Mode of the per-column lowest occupied voxel centre, ties toward
        the lower value.
    '''
    occ = grid.occupancy
    has = occ.any(axis=2)
    if not has.any():
        raise EmptyGrid("voxel grid has no occupied voxels")
    lowest = np.argmax(occ, axis=2)[has]
    k = util.misc.mode_lowest(lowest.tolist())
    floor_z = float(grid.origin[2] + (k + 0.5) * grid.resolution)
    log.debug("floor at z=%.4f from %d columns", floor_z, int(has.sum()))
    return floor_z


# =========================
# ***  column analysis  ***
# =========================

def _classify_columns(occ, z0, res, floor_z, profile):
    ''' Vectorized column analysis over occ[..., nz].
        Returns (classes, support_height, clearance, required).
    '''
    shape = occ.shape[:-1]
    nz = occ.shape[-1]
    k = np.arange(nz)
    bottoms = z0 + k * res
    tops = bottoms + res

    prev = np.concatenate([np.zeros(shape + (1,), dtype=bool), occ[..., :-1]], axis=-1)
    starts = occ & ~prev
    in_window = (bottoms >= floor_z - res - TOL) & (bottoms <= floor_z + profile.step_max + TOL)
    cand = starts & in_window
    has_support = cand.any(axis=-1)
    s = np.argmax(cand, axis=-1)

    # first empty voxel at or above the support run start ends the run
    after = (k >= s[..., None]) & ~occ
    run_end = np.where(after.any(axis=-1), np.argmax(after, axis=-1), nz)
    support_top = np.where(has_support, z0 + run_end * res, floor_z)
    support_height = np.where(has_support, support_top - floor_z, 0.0)

    above = occ & (tops > support_top[..., None] + TOL)
    has_above = above.any(axis=-1)
    first = np.argmax(above, axis=-1)
    clearance = np.where(has_above, np.maximum(0.0, bottoms[first] - support_top), np.inf)

    c = clearance - profile.safety_margin
    classes = np.full(shape, CellClass.BLOCKED, dtype=np.int8)
    required = np.full(shape, np.nan)
    free = c >= profile.h_max - TOL
    duck = ~free & (c >= profile.h_min - TOL)
    classes[free] = CellClass.FREE
    required[free] = profile.h_max
    classes[duck] = CellClass.DUCK
    required[duck] = np.clip(c[duck], profile.h_min, profile.h_max)
    step_blocked = support_height > profile.step_max + TOL
    classes[step_blocked] = CellClass.BLOCKED
    required[step_blocked] = np.nan
    return classes, support_height, clearance, required

def analyze_column(column_occupancy, z_centers, floor_z, profile, resolution=None):
    ''' Classify one voxel column. z_centers must be strictly increasing
        with uniform spacing; a single-voxel column needs `resolution`.
    '''
    occ = np.asarray(column_occupancy, dtype=bool)
    z = np.asarray(z_centers, dtype=float)
    if occ.shape != z.shape:
        raise ValueError("occupancy and z_centers differ in length")
    if len(z) >= 2:
        dz = np.diff(z)
        if np.any(dz <= 0) or np.ptp(dz) > TOL:
            raise NonUniformSpacing("column z-centers are not uniformly spaced")
        res = float(dz[0])
        if resolution is not None and abs(resolution - res) > TOL:
            raise NonUniformSpacing("z spacing {} differs from resolution {}".format(res, resolution))
    elif resolution is not None:
        res = float(resolution)
    elif len(z):
        raise NonUniformSpacing("cannot infer spacing from a single voxel")
    else:
        return CellAnalysis(0.0, math.inf, CellClass.FREE, profile.h_max)
    z0 = z[0] - res / 2
    cls, sup, clr, req = _classify_columns(occ[None, :], z0, res, floor_z, profile)
    return CellAnalysis(float(sup[0]), float(clr[0]), CellClass(int(cls[0])), float(req[0]))


def segment(grid, profile):
    ''' Height-segmented obstacle map of a voxel grid at its own resolution. '''
    floor_z = estimate_floor(grid)
    cls, sup, clr, req = _classify_columns(grid.occupancy, grid.origin[2],
        grid.resolution, floor_z, profile)
    tgrid = TraversabilityGrid(grid.origin[:2], grid.resolution, floor_z, cls, sup, clr, req)
    log.info("segmented %dx%d cells: %s", tgrid.dims[0], tgrid.dims[1],
        ', '.join('{}={}'.format(k, v) for k, v in sorted(tgrid.class_counts().items())))
    return tgrid


def inflate(tgrid, radius):
    ''' Grow BLOCKED cells by a square disc of ceil(radius/res) cells, and
        DUCK cells over FREE ones the same way. A cell touched by several
        DUCK cells takes their lowest required height and clearance.
    '''
    if radius < 0:
        raise ValueError("inflation radius must be >= 0")
    r = int(math.ceil(radius / tgrid.resolution - TOL))
    out = tgrid.copy()
    if r == 0:
        return out
    struct = np.ones((2*r+1, 2*r+1), dtype=bool)
    blocked = tgrid.classes == CellClass.BLOCKED
    duck = tgrid.classes == CellClass.DUCK
    grown_blocked = scipy.ndimage.binary_dilation(blocked, structure=struct)
    req = scipy.ndimage.minimum_filter(np.where(duck, tgrid.required, np.inf),
        footprint=struct, mode='constant', cval=np.inf)
    clr = scipy.ndimage.minimum_filter(np.where(duck, tgrid.clearance, np.inf),
        footprint=struct, mode='constant', cval=np.inf)

    ducked = ~grown_blocked & np.isfinite(req)
    out.classes[ducked] = CellClass.DUCK
    out.required[ducked] = req[ducked]
    out.clearance[ducked] = np.minimum(tgrid.clearance[ducked], clr[ducked])
    out.classes[grown_blocked] = CellClass.BLOCKED
    out.required[grown_blocked] = np.nan
    log.info("inflated by %d cells: %s", r,
        ', '.join('{}={}'.format(k, v) for k, v in sorted(out.class_counts().items())))
    return out


# =========================
# ***  commands  ***
# =========================

def segment_file(inGrid, outTGrid, profile=None, inflate_radius=0.0, raster=None):
    ''' Classify every cell of a voxel grid as FREE, DUCK or BLOCKED for the
        robot profile, optionally inflating obstacles by a radius.
    '''
    grid = scene.read_grid(inGrid)
    tgrid = segment(grid, read_profile(profile))
    if inflate_radius:
        tgrid = inflate(tgrid, inflate_radius)
    write_tgrid(tgrid, outTGrid)
    if raster:
        util.file.write_ppm(tgrid.to_rgb(), raster)
    return 0
def parser_segment(parser=argparse.ArgumentParser()):
    parser.add_argument('inGrid', help='Input voxel grid (JSON).')
    parser.add_argument('outTGrid', help='Output traversability grid (JSON).')
    parser.add_argument('--profile', default=None,
        help='Robot profile (JSON). [default: built-in quadruped profile]')
    parser.add_argument('--inflate', dest='inflate_radius', type=float, default=0.0,
        help='Obstacle inflation radius in meters. [default: %(default)s]')
    parser.add_argument('--raster', default=None,
        help='Also write the class map as a PPM image.')
    util.cmd.common_args(parser, (('loglevel',None), ('version',None)))
    util.cmd.attach_main(parser, segment_file, split_args=True)
    return parser
__commands__.append(('segment', parser_segment))

def floor_file(inGrid, outFile=None):
    ''' Estimate the floor height of a voxel grid. '''
    floor_z = estimate_floor(scene.read_grid(inGrid))
    if outFile:
        util.file.write_json({'floor_z': floor_z}, outFile)
    else:
        print(repr(floor_z))
    return 0
def parser_floor(parser=argparse.ArgumentParser()):
    parser.add_argument('inGrid', help='Input voxel grid (JSON).')
    parser.add_argument('outFile', nargs='?', default=None,
        help='Output JSON file. [default: print to stdout]')
    util.cmd.common_args(parser, (('loglevel',None), ('version',None)))
    util.cmd.attach_main(parser, floor_file, split_args=True)
    return parser
__commands__.append(('floor', parser_floor))


def full_parser():
    return util.cmd.make_parser(__commands__, __doc__)
if __name__ == '__main__':
    util.cmd.main_argparse(__commands__, __doc__)
