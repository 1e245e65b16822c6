#!/usr/bin/env python
''' Map quality metrics. Objects standing on the floor are extracted from a
    predicted voxel map and from ground truth, matched by bounding-box IoU,
    and scored with precision, recall and F-score. Surface accuracy is the
    RMSE of nearest-point distances from the reconstruction to the ground
    truth cloud.
'''

__author__ = "hatnav developers"
__commands__ = []

import argparse, logging, os, time
from dataclasses import dataclass, asdict, field
import numpy as np
import scipy.ndimage
import scipy.spatial
import util.cmd, util.file, util.stats
import scene, heightmap

log = logging.getLogger(__name__)

DEFAULT_IOU_THRESHOLD = 0.5
DEFAULT_MIN_VOXELS = 5


class EmptyCloud(Exception):
    pass


@dataclass(frozen=True)
class AABB:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        object.__setattr__(self, 'lo', tuple(float(v) for v in self.lo))
        object.__setattr__(self, 'hi', tuple(float(v) for v in self.hi))
        if len(self.lo) != 3 or len(self.hi) != 3:
            raise ValueError("AABB corners must be 3D points")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise ValueError("AABB min {} exceeds max {}".format(self.lo, self.hi))

    def volume(self):
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def intersection(self, other):
        ext = np.minimum(self.hi, other.hi) - np.maximum(self.lo, other.lo)
        return float(np.prod(np.maximum(ext, 0.0)))


@dataclass
class MapObject:
    id: int
    aabb: AABB
    voxels: np.ndarray = field(repr=False)

    def to_dict(self):
        return {'id': self.id, 'min': list(self.aabb.lo), 'max': list(self.aabb.hi),
            'voxel_count': int(len(self.voxels))}


def extract_objects(grid, floor_z=None, min_voxels=DEFAULT_MIN_VOXELS):
    ''' 26-connected components of the occupied voxels above the floor
        layer, numbered in grid scan order.
    '''
    if grid.count() == 0:
        raise heightmap.EmptyGrid("voxel grid has no occupied voxels")
    if floor_z is None:
        floor_z = heightmap.estimate_floor(grid)
    above = grid.z_centers() > floor_z + grid.resolution/2 + heightmap.TOL
    mask = grid.occupancy & above[None,None,:]
    labels, n = scipy.ndimage.label(mask, structure=np.ones((3, 3, 3), dtype=int))
    flat = labels.ravel()
    order = np.argsort(flat, kind='stable')
    counts = np.bincount(flat, minlength=n+1)
    bounds = np.concatenate([[0], np.cumsum(counts)])
    objects = []
    for k in range(1, n+1):
        members = order[bounds[k]:bounds[k+1]]
        if len(members) < min_voxels:
            continue
        idx = np.stack(np.unravel_index(members, grid.dims), axis=1)
        lo = grid.origin + idx.min(axis=0) * grid.resolution
        hi = grid.origin + (idx.max(axis=0) + 1) * grid.resolution
        objects.append(MapObject(len(objects), AABB(lo, hi), members))
    log.debug("extracted %d objects (%d components before the %d-voxel filter)",
        len(objects), n, min_voxels)
    return objects


def bbox_iou(a, b):
    inter = a.intersection(b)
    union = a.volume() + b.volume() - inter
    if union <= 0:
        return 1.0 if a == b else 0.0
    return inter / union

def box_iou(a, b):
    ''' Bounding-box IoU of two objects. '''
    return bbox_iou(a.aabb, b.aabb)

def voxel_iou(a, b):
    ''' IoU of the member voxel sets of two objects on the same grid. '''
    inter = len(np.intersect1d(a.voxels, b.voxels, assume_unique=True))
    union = len(a.voxels) + len(b.voxels) - inter
    return inter / union if union else 0.0


@dataclass
class Matching:
    tp: int
    fp: int
    fn: int
    pairs: list

def match_objects(pred, gt, iou_threshold=DEFAULT_IOU_THRESHOLD, iou=box_iou):
    ''' Greedy one-to-one matching in descending IoU order. pairs holds
        (pred index, gt index, iou) for every true positive.
    '''
    if not (0 < iou_threshold < 1):
        raise ValueError("iou_threshold must lie in (0, 1)")
    cands = []
    for i, p in enumerate(pred):
        for j, g in enumerate(gt):
            v = iou(p, g)
            if v >= iou_threshold:
                cands.append((-v, i, j))
    cands.sort()
    used_p, used_g = set(), set()
    pairs = []
    for v, i, j in cands:
        if i in used_p or j in used_g:
            continue
        used_p.add(i)
        used_g.add(j)
        pairs.append((i, j, -v))
    tp = len(pairs)
    return Matching(tp, len(pred) - tp, len(gt) - tp, pairs)

def prf(tp, fp, fn):
    precision = util.stats.safe_ratio(tp, tp + fp)
    recall = util.stats.safe_ratio(tp, tp + fn)
    f_score = util.stats.safe_ratio(2 * precision * recall, precision + recall)
    return precision, recall, f_score


def _cloud_points(cloud):
    pts = cloud.points if isinstance(cloud, scene.PointCloud) else np.asarray(cloud, dtype=float)
    return pts.reshape(-1, 3)

def nearest_distances(recon, gt):
    ''' Distance from each reconstructed point to its nearest ground truth point. '''
    recon, gt = _cloud_points(recon), _cloud_points(gt)
    if len(recon) == 0 or len(gt) == 0:
        raise EmptyCloud("nearest-point distances need two non-empty clouds")
    d, _ = scipy.spatial.cKDTree(gt).query(recon, k=1)
    return d

def sdf_rmse(recon, gt):
    ''' Unsigned surface error: RMSE of nearest-point distances. '''
    d = nearest_distances(recon, gt)
    return float(np.sqrt(np.mean(d*d)))


@dataclass
class EvalReport:
    precision: float
    recall: float
    f_score: float
    tp: int
    fp: int
    fn: int
    ious: list
    iou_mean: float
    iou_pooled: float
    rmse_sdf_m: float
    time_sec: float
    n_pred: int
    n_gt: int
    iou_threshold: float
    volumetric: bool

    @property
    def iou_pct(self):
        return 100.0 * self.iou_mean

    def to_dict(self, with_time=True):
        d = asdict(self)
        d['iou_pct'] = self.iou_pct
        if not with_time:
            del d['time_sec']
        return d


def evaluate(pred_grid, gt_cloud, recon_cloud, iou_threshold=DEFAULT_IOU_THRESHOLD,
        min_voxels=DEFAULT_MIN_VOXELS, volumetric=False, time_sec=0.0):
    ''' Score a predicted voxel map against a ground truth point cloud. The
        ground truth is voxelized on the prediction's grid so that both
        object sets share one geometry.
    '''
    gt_pts = _cloud_points(gt_cloud)
    if len(gt_pts) == 0:
        raise EmptyCloud("ground truth cloud is empty")
    floor_z = heightmap.estimate_floor(pred_grid)
    pred = extract_objects(pred_grid, floor_z, min_voxels)
    gt_grid = scene.voxelize_points(scene.PointCloud(gt_pts), pred_grid.resolution, pred_grid.bounds())
    gt = extract_objects(gt_grid, floor_z, min_voxels) if gt_grid.count() else []
    iou = voxel_iou if volumetric else box_iou
    m = match_objects(pred, gt, iou_threshold, iou)
    precision, recall, f_score = prf(m.tp, m.fp, m.fn)
    ious = [v for _, _, v in m.pairs]
    inter = union = 0.0
    for i, j, _ in m.pairs:
        if volumetric:
            n = len(np.intersect1d(pred[i].voxels, gt[j].voxels, assume_unique=True))
            inter += n
            union += len(pred[i].voxels) + len(gt[j].voxels) - n
        else:
            n = pred[i].aabb.intersection(gt[j].aabb)
            inter += n
            union += pred[i].aabb.volume() + gt[j].aabb.volume() - n
    report = EvalReport(
        precision=precision, recall=recall, f_score=f_score,
        tp=m.tp, fp=m.fp, fn=m.fn, ious=ious,
        iou_mean=float(np.mean(ious)) if ious else 0.0,
        iou_pooled=util.stats.safe_ratio(inter, union),
        rmse_sdf_m=sdf_rmse(recon_cloud, gt_pts),
        time_sec=float(time_sec), n_pred=len(pred), n_gt=len(gt),
        iou_threshold=iou_threshold, volumetric=volumetric)
    log.info("map eval: %d pred / %d gt objects, P %.3f R %.3f F %.3f, IoU %.1f%%, RMSE %.4f m",
        len(pred), len(gt), precision, recall, f_score, report.iou_pct, report.rmse_sdf_m)
    return report


# =========================
# ***  commands  ***
# =========================

def load_prediction(inPred, resolution=scene.DEFAULT_RESOLUTION, recon_density=1000.0, seed=0):
    ''' A predicted map as (voxel grid, reconstructed surface points). A grid
        JSON stands for its occupied voxel centres; a mesh is voxelized and
        its surface sampled; a PLY cloud is voxelized directly.
    '''
    ext = os.path.splitext(inPred)[1].lower()
    if ext == '.json':
        grid = scene.read_grid(inPred)
        return grid, scene.PointCloud(grid.occupied_centers())
    if ext == '.ply':
        try:
            mesh = scene.load_mesh(inPred)
        except scene.EmptyMesh:
            mesh = None
        if mesh is None:
            cloud = scene.load_point_cloud(inPred)
            if len(cloud.points) == 0:
                raise EmptyCloud("{} holds no points".format(inPred))
            return scene.voxelize_points(cloud, resolution), cloud
    else:
        mesh = scene.load_mesh(inPred)
    grid = scene.voxelize(mesh, resolution)
    return grid, scene.sample_surface(mesh, recon_density, seed)

def eval_map_file(inPred, inGt, outJson, iou_threshold=DEFAULT_IOU_THRESHOLD,
        min_voxels=DEFAULT_MIN_VOXELS, resolution=scene.DEFAULT_RESOLUTION,
        recon_density=1000.0, volumetric=False, seed=0):
    ''' Score a predicted map against a ground truth point cloud. '''
    t0 = time.perf_counter()
    grid, recon = load_prediction(inPred, resolution, recon_density, seed)
    elapsed = time.perf_counter() - t0
    gt = scene.load_point_cloud(inGt)
    report = evaluate(grid, gt, recon, iou_threshold, min_voxels, volumetric, elapsed)
    util.file.write_json(report.to_dict(), outJson)
    return 0
def parser_eval_map(parser=argparse.ArgumentParser()):
    parser.add_argument('inPred', help='Predicted map: voxel grid (JSON), mesh (OBJ/PLY) or point cloud (PLY).')
    parser.add_argument('inGt', help='Ground truth point cloud (PLY).')
    parser.add_argument('outJson', help='Output evaluation report (JSON).')
    parser.add_argument('--iou_threshold', type=float, default=DEFAULT_IOU_THRESHOLD,
        help='Minimum IoU for a true positive match. [default: %(default)s]')
    parser.add_argument('--min_voxels', type=int, default=DEFAULT_MIN_VOXELS,
        help='Discard components with fewer voxels. [default: %(default)s]')
    parser.add_argument('--resolution', type=float, default=scene.DEFAULT_RESOLUTION,
        help='Voxel size used for mesh or cloud predictions. [default: %(default)s]')
    parser.add_argument('--recon_density', type=float, default=1000.0,
        help='Surface samples per square meter for mesh predictions. [default: %(default)s]')
    parser.add_argument('--volumetric', action='store_true', default=False,
        help='Match objects by voxel IoU instead of bounding-box IoU.')
    util.cmd.common_args(parser, (('loglevel',None), ('version',None), ('seed',None)))
    util.cmd.attach_main(parser, eval_map_file, split_args=True)
    return parser
__commands__.append(('eval_map', parser_eval_map))


def full_parser():
    return util.cmd.make_parser(__commands__, __doc__)
if __name__ == '__main__':
    util.cmd.main_argparse(__commands__, __doc__)
