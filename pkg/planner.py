#!/usr/bin/env python
''' Height-adaptive trajectory planning. A feasible path is seeded by A* over
    the traversability grid, then refined by alternating online training of
    a neural collision field with gradient steps on the interior waypoints.
    Finally every waypoint is annotated with the body height the robot must
    adopt there, and path metrics are computed.
'''

__author__ = "hatnav developers"
__commands__ = []

import argparse, collections, copy, heapq, logging, math
from dataclasses import dataclass, asdict
import numpy as np
import util.cmd, util.file
import heightmap, neural_field
from heightmap import CellClass, MODE_HAT, MODE_FLAT2D, MODES
from neural_field import FieldConfig, TrainStats

log = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
MAX_HALVINGS = 10
DESCENT_TOL = 1e-12
CONVERGENCE_REL = 1e-4
CONVERGENCE_PATIENCE = 10
MIN_STEP_SCALE = 2.0**-40
# fraction of a cell a seed waypoint is moved off a shared cell corner
CORNER_NUDGE = 1e-4
DEFAULT_PRETRAIN_STEPS = 2000

DEFAULT_SPEED = 0.2
DEFAULT_TURN_TIME = 2.0
DEFAULT_DUCK_TIME = 2.0
DEFAULT_MAX_SLOPE = 0.2

# ducked path segments and full-height segments on raster overlays
DUCK_COLOR = (255, 255, 0)
PATH_COLOR = (0, 0, 255)


class StartBlocked(Exception):
    pass

class GoalBlocked(Exception):
    pass

class NoFeasiblePath(Exception):
    pass

class DivergedCost(Exception):
    pass

class WaypointBlocked(Exception):
    pass

class TooFewWaypoints(Exception):
    pass

class InvalidTrajectory(Exception):
    pass

class InvalidPlannerConfig(Exception):
    pass


@dataclass(frozen=True)
class PlannerConfig:
    n_waypoints: int = 64
    w_len: float = 1.0
    w_smooth: float = 4.0
    w_col: float = 30.0
    w_duck: float = 0.5
    learning_rate: float = 0.01
    outer_iterations: int = 300
    field_steps: int = 10
    waypoint_steps: int = 5
    p_stop: float = 0.3
    footprint_samples: int = 8
    footprint_radius: float = 0.15
    segment_samples: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.n_waypoints < 8:
            raise InvalidPlannerConfig("n_waypoints must be >= 8, got {}".format(self.n_waypoints))
        if min(self.w_len, self.w_smooth, self.w_col, self.w_duck) < 0:
            raise InvalidPlannerConfig("cost weights must be >= 0")
        if not (self.learning_rate > 0):
            raise InvalidPlannerConfig("learning_rate must be > 0")
        if self.outer_iterations < 0 or self.field_steps < 0 or self.waypoint_steps < 1:
            raise InvalidPlannerConfig("iteration counts must be non-negative (waypoint_steps >= 1)")
        if not (0 < self.p_stop < 1):
            raise InvalidPlannerConfig("p_stop must lie in (0, 1), got {}".format(self.p_stop))
        if self.footprint_samples < 1:
            raise InvalidPlannerConfig("footprint_samples must be >= 1")
        if self.footprint_radius < 0:
            raise InvalidPlannerConfig("footprint_radius must be >= 0")
        if self.segment_samples < 1:
            raise InvalidPlannerConfig("segment_samples must be >= 1")

    @classmethod
    def from_dict(cls, d):
        return heightmap.dataclass_from_dict(cls, d, InvalidPlannerConfig)

    def to_dict(self):
        return asdict(self)

def read_planner_config(inFile=None):
    if inFile is None:
        return PlannerConfig()
    return PlannerConfig.from_dict(util.file.read_json(inFile))


Waypoint = collections.namedtuple('Waypoint', ['x', 'y', 'body_height'])

class Trajectory(object):
    ''' Ordered planar waypoints anchored at start and goal, with an
        optional body height per waypoint.
    '''
    def __init__(self, points, heights=None, collision_warning=False):
        self.points = np.array(points, dtype=float).reshape(-1, 2)
        if len(self.points) < 2:
            raise InvalidTrajectory("a trajectory needs at least 2 waypoints")
        if not np.all(np.isfinite(self.points)):
            raise InvalidTrajectory("non-finite waypoint coordinates")
        if np.any(np.all(self.points[1:] == self.points[:-1], axis=1)):
            raise InvalidTrajectory("consecutive waypoints coincide")
        self.heights = None
        if heights is not None:
            self.heights = np.array(heights, dtype=float).reshape(-1)
            if len(self.heights) != len(self.points):
                raise InvalidTrajectory("{} heights for {} waypoints".format(
                    len(self.heights), len(self.points)))
        self.collision_warning = bool(collision_warning)

    def __len__(self):
        return len(self.points)

    @property
    def start(self):
        return tuple(self.points[0].tolist())

    @property
    def goal(self):
        return tuple(self.points[-1].tolist())

    def waypoints(self):
        hs = self.heights if self.heights is not None else [None] * len(self)
        return [Waypoint(float(p[0]), float(p[1]), None if h is None else float(h))
            for p, h in zip(self.points, hs)]

    def segment_lengths(self):
        return np.linalg.norm(np.diff(self.points, axis=0), axis=1)

    def length(self):
        return float(self.segment_lengths().sum())

    def with_heights(self, heights):
        return Trajectory(self.points, heights, self.collision_warning)

    def to_dict(self):
        return {'start': list(self.start), 'goal': list(self.goal),
            'waypoints': [list(w) for w in self.waypoints()],
            'collision_warning': self.collision_warning}

    @classmethod
    def from_dict(cls, d):
        wps = d['waypoints']
        points = [w[:2] for w in wps]
        heights = [w[2] if len(w) > 2 else None for w in wps]
        if all(h is None for h in heights):
            heights = None
        elif any(h is None for h in heights):
            raise InvalidTrajectory("body heights given for only some waypoints")
        traj = cls(points, heights, d.get('collision_warning', False))
        for key, end in (('start', traj.start), ('goal', traj.goal)):
            if key in d and tuple(d[key]) != end:
                raise InvalidTrajectory("{} {} does not match its waypoint {}".format(key, d[key], end))
        return traj

def read_trajectory(inFile):
    return Trajectory.from_dict(util.file.read_json(inFile))

def write_trajectory(traj, outFile):
    util.file.write_json(traj.to_dict(), outFile)


# =========================
# ***  seed path  ***
# =========================

_NEIGHBOURS = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if dx or dy]

def _astar(passable, start, goal):
    ''' 8-connected A* in cell units. Returns the list of cells from start
        to goal, or None.
    '''
    nx, ny = passable.shape
    g = np.full((nx, ny), np.inf)
    parent = {}
    closed = np.zeros((nx, ny), dtype=bool)
    gx, gy = goal
    g[start] = 0.0
    heap = [(math.hypot(start[0]-gx, start[1]-gy), start[0], start[1])]
    while heap:
        f, ix, iy = heapq.heappop(heap)
        if closed[ix, iy]:
            continue
        closed[ix, iy] = True
        if (ix, iy) == goal:
            path = [goal]
            while path[-1] != start:
                path.append(parent[path[-1]])
            return path[::-1]
        for dx, dy in _NEIGHBOURS:
            jx, jy = ix+dx, iy+dy
            if not (0 <= jx < nx and 0 <= jy < ny) or closed[jx, jy] or not passable[jx, jy]:
                continue
            cost = g[ix, iy] + (math.sqrt(2.0) if dx and dy else 1.0)
            if cost < g[jx, jy]:
                g[jx, jy] = cost
                parent[(jx, jy)] = (ix, iy)
                heapq.heappush(heap, (cost + math.hypot(jx-gx, jy-gy), jx, jy))
    return None

def resample_polyline(poly, n):
    ''' n points evenly spaced by arc length; the ends are kept exactly. '''
    poly = np.asarray(poly, dtype=float)
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(poly, axis=0), axis=1))])
    targets = np.linspace(0.0, s[-1], n)
    out = np.stack([np.interp(targets, s, poly[:,0]), np.interp(targets, s, poly[:,1])], axis=1)
    out[0] = poly[0]
    out[-1] = poly[-1]
    return out

def _fmt_point(p):
    return tuple(np.asarray(p, dtype=float).tolist())

def seed_path(tgrid, start, goal, mode, n):
    ''' Shortest 8-connected path through cells passable in `mode`, as a
        polyline through cell centres resampled to n waypoints.
    '''
    start = np.asarray(start, dtype=float).reshape(2)
    goal = np.asarray(goal, dtype=float).reshape(2)
    if np.array_equal(start, goal):
        raise InvalidTrajectory("start and goal coincide")
    passable = tgrid.passable(mode)
    cells = []
    for p, err in ((start, StartBlocked), (goal, GoalBlocked)):
        c = tgrid.cells_of(p)
        if not tgrid.in_bounds(c) or not passable[c[0], c[1]]:
            raise err("{} lies in a cell that is not passable in {} mode".format(_fmt_point(p), mode))
        cells.append((int(c[0]), int(c[1])))
    path = _astar(passable, cells[0], cells[1])
    if path is None:
        raise NoFeasiblePath("no {} connection from {} to {}".format(mode,
            _fmt_point(start), _fmt_point(goal)))
    poly = [start] + [tgrid.cell_center(ix, iy) for ix, iy in path[1:-1]] + [goal]
    points = resample_polyline(poly, n)
    # a diagonal move between two cells that only share a corner passes
    # through that corner; waypoints landing on it go to the nearer path cell
    off = np.flatnonzero(~tgrid.points_passable(points, mode))
    if len(off):
        centers = np.array([tgrid.cell_center(ix, iy) for ix, iy in path])
        for i in off:
            d = centers - points[i]
            c = d[np.argmin(np.linalg.norm(d, axis=1))]
            points[i] += CORNER_NUDGE * tgrid.resolution * c / np.linalg.norm(c)
    log.debug("A* %s path visits %d cells", mode, len(path))
    return Trajectory(points)


# =========================
# ***  objective  ***
# =========================

def footprint_offsets(cfg):
    k = np.arange(cfg.footprint_samples)
    a = 2.0 * math.pi * k / cfg.footprint_samples
    return cfg.footprint_radius * np.stack([np.cos(a), np.sin(a)], axis=1)

def segment_fractions(cfg):
    ''' Midpoint-rule positions of the field samples along a segment. '''
    return (np.arange(cfg.segment_samples) + 0.5) / cfg.segment_samples

def field_samples(points, offsets, fracs):
    ''' Footprint sample points for every segment position, shaped
        (segments * positions * footprint, 2).
    '''
    d1 = np.diff(points, axis=0)
    q = points[:-1,None,:] + fracs[None,:,None] * d1[:,None,:]
    return (q[:,:,None,:] + offsets[None,None,:,:]).reshape(-1, 2)

def _objective_points(points, field, cfg, offsets=None, fracs=None, with_grad=True):
    ''' Returns (weighted terms, gradient) for an (N, 2) waypoint array; the
        gradient is None when with_grad is False. The field terms integrate
        the footprint-mean probabilities along the path: each segment
        contributes its length times the mean over its sample positions.
    '''
    if offsets is None:
        offsets = footprint_offsets(cfg)
    if fracs is None:
        fracs = segment_fractions(cfg)
    m, s, k = len(points) - 1, len(fracs), len(offsets)
    d1 = np.diff(points, axis=0)
    d2 = points[2:] - 2*points[1:-1] + points[:-2]
    seg = np.linalg.norm(d1, axis=1)
    samples = field_samples(points, offsets, fracs)
    if with_grad:
        fgrad, probs = field.input_grad(samples)
    else:
        probs = field.forward(samples)
    mean_p = probs.reshape(m, s*k, 2).mean(axis=1)
    terms = {
        'length': cfg.w_len * float(np.sum(d1*d1)),
        'smooth': cfg.w_smooth * float(np.sum(d2*d2)),
        'collision': cfg.w_col * float(seg @ mean_p[:,0]),
        'duck': cfg.w_duck * float(seg @ mean_p[:,1]),
    }
    if not with_grad:
        return terms, None
    w = np.array([cfg.w_col, cfg.w_duck])
    grad = np.zeros_like(points)
    grad[1:] += 2.0 * cfg.w_len * d1
    grad[:-1] -= 2.0 * cfg.w_len * d1
    grad[2:] += 2.0 * cfg.w_smooth * d2
    grad[1:-1] -= 4.0 * cfg.w_smooth * d2
    grad[:-2] += 2.0 * cfg.w_smooth * d2
    # segment length changes
    unit = d1 / np.where(seg > 0, seg, 1.0)[:,None]
    along = (mean_p @ w)[:,None] * unit
    grad[1:] += along
    grad[:-1] -= along
    # sample positions move with both segment ends
    g = (fgrad.reshape(m, s, k, 2, 2) * w[None,None,None,:,None]).sum(axis=(2, 3))
    g *= (seg / (s*k))[:,None,None]
    grad[:-1] += np.einsum('msa,s->ma', g, 1.0 - fracs)
    grad[1:] += np.einsum('msa,s->ma', g, fracs)
    grad[0] = 0.0
    grad[-1] = 0.0
    return terms, grad

def objective_terms(traj, field, cfg):
    ''' The four weighted cost components of a trajectory. '''
    terms, _ = _objective_points(traj.points, field, cfg, with_grad=False)
    return terms

def objective(traj, field, cfg):
    ''' (cost, gradient) with the gradient zero at both anchors. '''
    terms, grad = _objective_points(traj.points, field, cfg)
    return sum(terms.values()), grad


class WaypointOptimizer(object):
    ''' Adam on the interior waypoints. A step is taken only if it keeps
        every waypoint in a passable cell, keeps every segment from turning
        back on itself and does not raise the cost, under the current field
        and under the reference field when one is given. Otherwise it is
        halved, up to MAX_HALVINGS times. The scale a step was accepted at,
        doubled, is where the next step starts.
    '''

    def __init__(self, points, tgrid, mode, cfg, reference=None):
        self.points = np.array(points, dtype=float)
        self.tgrid = tgrid
        self.mode = mode
        self.cfg = cfg
        self.reference = reference
        self.offsets = footprint_offsets(cfg)
        self.fracs = segment_fractions(cfg)
        self._m = np.zeros_like(self.points)
        self._v = np.zeros_like(self.points)
        self._t = 0
        self.step_scale = 1.0
        self.rejected = 0
        self.reference_cost = None

    def _terms(self, field, points, with_grad):
        terms, grad = _objective_points(points, field, self.cfg, self.offsets, self.fracs, with_grad)
        cost = sum(terms.values())
        if not math.isfinite(cost):
            raise DivergedCost("objective became {}".format(cost))
        return cost, grad

    def cost(self, field, points=None):
        return self._terms(field, self.points if points is None else points, False)[0]

    def evaluate(self, field, points=None):
        return self._terms(field, self.points if points is None else points, True)

    def score_reference(self, points=None):
        ''' Cost under the reference field, or None without one. '''
        if self.reference is None:
            return None
        return self.cost(self.reference, points)

    def feasible(self, points):
        if not np.all(self.tgrid.points_passable(points, self.mode)):
            return False
        seg = np.diff(points, axis=0)
        if not np.all(np.any(seg != 0, axis=1)):
            return False
        return bool(np.all(np.sum(seg * np.diff(self.points, axis=0), axis=1) > 0))

    def phase(self, field, steps):
        ''' Run `steps` updates against a fixed field; returns the cost
            before the first and after every update.
        '''
        cost, grad = self.evaluate(field)
        ref = self.score_reference()
        costs = [cost]
        lr = self.cfg.learning_rate
        for _ in range(steps):
            self._t += 1
            self._m = ADAM_BETA1*self._m + (1.0-ADAM_BETA1)*grad
            self._v = ADAM_BETA2*self._v + (1.0-ADAM_BETA2)*grad*grad
            mhat = self._m / (1.0 - ADAM_BETA1**self._t)
            vhat = self._v / (1.0 - ADAM_BETA2**self._t)
            step = lr * mhat / (np.sqrt(vhat) + ADAM_EPS)
            scale = self.step_scale
            for _ in range(MAX_HALVINGS + 1):
                cand = self.points - scale*step
                if self.feasible(cand):
                    c_cost = self.cost(field, cand)
                    if c_cost <= cost + DESCENT_TOL:
                        c_ref = self.score_reference(cand)
                        if c_ref is None or c_ref <= ref + DESCENT_TOL:
                            self.points, cost, ref = cand, c_cost, c_ref
                            grad = self.evaluate(field)[1]
                            break
                scale *= 0.5
            else:
                self.rejected += 1
            self.step_scale = max(min(1.0, 2.0*scale), MIN_STEP_SCALE)
            costs.append(cost)
        self.reference_cost = ref
        return costs


def optimize(traj, tgrid, mode, cfg, field=None, pretrain_steps=DEFAULT_PRETRAIN_STEPS):
    ''' Alternate online field training and waypoint descent. Without a
        field, a new one is fitted to the grid for pretrain_steps first.

        Returns the optimized trajectory, the online training statistics and
        the cost after each outer iteration. The costs are scored under the
        field as it was when optimization began (entry 0 is the cost of the
        input trajectory), so they never increase.
    '''
    if mode not in MODES:
        raise ValueError("unknown planning mode {!r}".format(mode))
    if field is None:
        field = neural_field.field_init(FieldConfig(seed=cfg.seed), tgrid.world_rect())
        if pretrain_steps:
            neural_field.field_train(field, tgrid, mode, pretrain_steps)
    opt = WaypointOptimizer(traj.points, tgrid, mode, cfg, reference=copy.deepcopy(field))
    history = [opt.score_reference()]
    losses = []
    calm = 0
    for it in range(cfg.outer_iterations):
        if cfg.field_steps:
            losses.extend(neural_field.field_train(field, tgrid, mode, cfg.field_steps).losses)
        opt.phase(field, cfg.waypoint_steps)
        history.append(opt.reference_cost)
        rel = abs(history[-1] - history[-2]) / max(abs(history[-2]), 1e-12)
        calm = calm + 1 if rel < CONVERGENCE_REL else 0
        if calm >= CONVERGENCE_PATIENCE:
            log.info("%s optimization converged after %d outer iterations", mode, it+1)
            break
    else:
        log.info("%s optimization stopped at the iteration limit (%d)", mode, cfg.outer_iterations)
    points, labels = neural_field.field_labels(tgrid, mode)
    stats = TrainStats(losses, field.accuracy(points, labels))
    p_block = field.forward(opt.points)[:,0]
    warning = bool(np.any(p_block >= cfg.p_stop))
    if warning:
        log.warning("%d waypoints have p_block >= %.2f", int(np.sum(p_block >= cfg.p_stop)), cfg.p_stop)
    log.info("%s cost %.4f -> %.4f, length %.3f m, %d rejected steps", mode, history[0],
        history[-1], Trajectory(opt.points).length(), opt.rejected)
    return Trajectory(opt.points, collision_warning=warning), stats, history


def plan_record(traj, metrics, stats, history):
    ''' Path metrics plus the planning outcome, as written next to a plan. '''
    out = metrics.to_dict()
    out.update({
        'collision_warning': traj.collision_warning,
        'field_accuracy': stats.accuracy,
        'cost_initial': history[0],
        'cost_final': history[-1],
        'outer_iterations': len(history) - 1,
    })
    return out


# =========================
# ***  body heights  ***
# =========================

def annotate_heights(traj, tgrid, profile, max_slope=DEFAULT_MAX_SLOPE):
    ''' Body height per waypoint: the cell requirement (h_max on FREE
        cells), lowered ahead of and after duck zones so that height
        changes by at most max_slope per meter of travel.
    '''
    if not (max_slope > 0):
        raise ValueError("max_slope must be > 0")
    cls, req, _ = tgrid.lookup(traj.points)
    bad = np.flatnonzero(cls == CellClass.BLOCKED)
    if len(bad):
        i = int(bad[0])
        raise WaypointBlocked("waypoint {} at {} is not in a passable cell".format(
            i, tuple(traj.points[i].tolist())))
    h = np.where(cls == CellClass.FREE, profile.h_max, req)
    d = traj.segment_lengths()
    for i in range(1, len(h)):
        h[i] = min(h[i], h[i-1] + max_slope*d[i-1])
    for i in range(len(h)-2, -1, -1):
        h[i] = min(h[i], h[i+1] + max_slope*d[i])
    return traj.with_heights(np.clip(h, profile.h_min, profile.h_max))


# =========================
# ***  path metrics  ***
# =========================

@dataclass
class PathMetrics:
    length: float
    max_curvature: float
    est_time: float
    duck_fraction: float
    total_turn: float
    duck_transitions: int

    def to_dict(self):
        return asdict(self)

def path_metrics(traj, speed=DEFAULT_SPEED, turn_time_per_rad=DEFAULT_TURN_TIME,
        duck_transition_time=DEFAULT_DUCK_TIME, h_max=None):
    if len(traj) < 3:
        raise TooFewWaypoints("curvature needs at least 3 waypoints, got {}".format(len(traj)))
    if not (speed > 0):
        raise ValueError("speed must be > 0")
    seg = np.diff(traj.points, axis=0)
    lens = np.linalg.norm(seg, axis=1)
    a, b = seg[:-1], seg[1:]
    cross = a[:,0]*b[:,1] - a[:,1]*b[:,0]
    theta = np.arctan2(np.abs(cross), np.sum(a*b, axis=1))
    kappa = theta / (0.5 * (lens[:-1] + lens[1:]))
    length = float(lens.sum())
    if traj.heights is None:
        ducked = np.zeros(len(traj), dtype=bool)
    else:
        top = traj.heights.max() if h_max is None else h_max
        ducked = traj.heights < top - 1e-9
    transitions = int(np.sum(ducked[1:] != ducked[:-1]))
    duck_len = float(lens[ducked[1:] | ducked[:-1]].sum())
    total_turn = float(theta.sum())
    return PathMetrics(
        length=length,
        max_curvature=float(kappa.max()),
        est_time=length/speed + turn_time_per_rad*total_turn + duck_transition_time*transitions,
        duck_fraction=duck_len / length,
        total_turn=total_turn,
        duck_transitions=transitions)


def overlay_rgb(tgrid, traj):
    ''' Class colours with the trajectory drawn on top, +y up. Segments
        with either end below full height are drawn in DUCK_COLOR.
    '''
    rgb = tgrid.to_rgb().copy()
    ny = tgrid.dims[1]
    if traj.heights is None:
        ducked = np.zeros(len(traj), dtype=bool)
    else:
        ducked = traj.heights < traj.heights.max() - 1e-9
    for i in range(len(traj) - 1):
        p, q = traj.points[i], traj.points[i+1]
        n = max(2, int(math.ceil(4 * np.linalg.norm(q - p) / tgrid.resolution)) + 1)
        pts = p + np.linspace(0, 1, n)[:,None] * (q - p)
        cells = tgrid.cells_of(pts)
        cells = cells[tgrid.in_bounds(cells)]
        color = DUCK_COLOR if (ducked[i] or ducked[i+1]) else PATH_COLOR
        rgb[ny - 1 - cells[:,1], cells[:,0]] = color
    return rgb


# =========================
# ***  commands  ***
# =========================

def parse_point(s):
    try:
        x, y = [float(v) for v in s.split(',')]
    except ValueError:
        raise argparse.ArgumentTypeError("expected x,y but got {!r}".format(s))
    return (x, y)

def plan_file(inTGrid, outTraj, start, goal, mode=MODE_HAT, profile=None, config=None,
        field=None, max_slope=DEFAULT_MAX_SLOPE, speed=DEFAULT_SPEED,
        turn_time=DEFAULT_TURN_TIME, duck_time=DEFAULT_DUCK_TIME,
        metrics=None, raster=None, seed=None, pretrain_steps=DEFAULT_PRETRAIN_STEPS):
    ''' Plan a height-annotated trajectory from start to goal. '''
    tgrid = heightmap.read_tgrid(inTGrid)
    robot = heightmap.read_profile(profile)
    cfg = read_planner_config(config)
    if seed is not None:
        cfg = PlannerConfig(**dict(cfg.to_dict(), seed=seed))
    pretrained = neural_field.read_field(field) if field else None
    seed_traj = seed_path(tgrid, start, goal, mode, cfg.n_waypoints)
    traj, stats, history = optimize(seed_traj, tgrid, mode, cfg, pretrained, pretrain_steps)
    traj = annotate_heights(traj, tgrid, robot, max_slope)
    write_trajectory(traj, outTraj)
    if metrics:
        m = path_metrics(traj, speed, turn_time, duck_time, robot.h_max)
        util.file.write_json(plan_record(traj, m, stats, history), metrics)
    if raster:
        util.file.write_ppm(overlay_rgb(tgrid, traj), raster)
    return 0
def parser_plan(parser=argparse.ArgumentParser()):
    parser.add_argument('inTGrid', help='Input traversability grid (JSON).')
    parser.add_argument('outTraj', help='Output trajectory (JSON).')
    parser.add_argument('--start', type=parse_point, required=True, help='Start position as x,y.')
    parser.add_argument('--goal', type=parse_point, required=True, help='Goal position as x,y.')
    parser.add_argument('--mode', default=MODE_HAT, choices=MODES,
        help='hat plans through duck zones, flat2d treats them as obstacles. [default: %(default)s]')
    parser.add_argument('--profile', default=None,
        help='Robot profile (JSON). [default: built-in quadruped profile]')
    parser.add_argument('--config', default=None,
        help='Planner parameters (JSON). [default: built-in defaults]')
    parser.add_argument('--field', default=None,
        help='Pre-trained field checkpoint (JSON) to continue training from.')
    parser.add_argument('--pretrain_steps', type=int, default=DEFAULT_PRETRAIN_STEPS,
        help='Training steps for a new field when --field is not given. [default: %(default)s]')
    parser.add_argument('--max_slope', type=float, default=DEFAULT_MAX_SLOPE,
        help='Maximum body height change per meter of travel. [default: %(default)s]')
    parser.add_argument('--speed', type=float, default=DEFAULT_SPEED,
        help='Locomotion speed in m/s for the time estimate. [default: %(default)s]')
    parser.add_argument('--turn_time', type=float, default=DEFAULT_TURN_TIME,
        help='Seconds per radian of turning. [default: %(default)s]')
    parser.add_argument('--duck_time', type=float, default=DEFAULT_DUCK_TIME,
        help='Seconds per change between full and lowered height. [default: %(default)s]')
    parser.add_argument('--metrics', default=None, help='Also write path metrics (JSON).')
    parser.add_argument('--raster', default=None, help='Also write the path over the class map (PPM).')
    parser.add_argument('--seed', type=int, default=None,
        help='Random seed. [default: seed from --config]')
    util.cmd.common_args(parser, (('loglevel',None), ('version',None)))
    util.cmd.attach_main(parser, plan_file, split_args=True)
    return parser
__commands__.append(('plan', parser_plan))

def metrics_file(inTraj, outMetrics, speed=DEFAULT_SPEED, turn_time=DEFAULT_TURN_TIME,
        duck_time=DEFAULT_DUCK_TIME, h_max=None):
    ''' Compute length, curvature, time and duck fraction of a trajectory. '''
    m = path_metrics(read_trajectory(inTraj), speed, turn_time, duck_time, h_max)
    util.file.write_json(m.to_dict(), outMetrics)
    return 0
def parser_metrics(parser=argparse.ArgumentParser()):
    parser.add_argument('inTraj', help='Input trajectory (JSON).')
    parser.add_argument('outMetrics', help='Output metrics (JSON).')
    parser.add_argument('--speed', type=float, default=DEFAULT_SPEED,
        help='Locomotion speed in m/s. [default: %(default)s]')
    parser.add_argument('--turn_time', type=float, default=DEFAULT_TURN_TIME,
        help='Seconds per radian of turning. [default: %(default)s]')
    parser.add_argument('--duck_time', type=float, default=DEFAULT_DUCK_TIME,
        help='Seconds per change between full and lowered height. [default: %(default)s]')
    parser.add_argument('--h_max', type=float, default=None,
        help='Full body height. [default: highest waypoint]')
    util.cmd.common_args(parser, (('loglevel',None), ('version',None)))
    util.cmd.attach_main(parser, metrics_file, split_args=True)
    return parser
__commands__.append(('metrics', parser_metrics))


def full_parser():
    return util.cmd.make_parser(__commands__, __doc__)
if __name__ == '__main__':
    util.cmd.main_argparse(__commands__, __doc__)
