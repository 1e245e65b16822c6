#!/usr/bin/env python
''' End-to-end pipeline: scene, voxel grid, height-segmented map, collision
    fields, HAT and 2D trajectories, map evaluation and a run report. Every
    stage reads the artifacts of earlier stages from the output directory,
    so any stage can be re-run on its own.
'''

__author__ = "hatnav developers"
__commands__ = []

import argparse, contextlib, logging, os, shutil, sys, time
import dataclasses
from dataclasses import dataclass, asdict, fields
import util.cmd, util.file, util.misc
import scene, heightmap, neural_field, planner, evalmap
from heightmap import RobotProfile, MODE_HAT, MODE_FLAT2D, MODES
from neural_field import FieldConfig
from planner import PlannerConfig, DEFAULT_MAX_SLOPE

log = logging.getLogger(__name__)


class StageError(Exception):
    def __init__(self, stage, cause):
        super(StageError, self).__init__("stage {} failed: {}: {}".format(
            stage, type(cause).__name__, cause))
        self.stage = stage
        self.cause = cause

class SchemaMismatch(Exception):
    pass

class InvalidPipelineConfig(Exception):
    pass


# =========================
# ***  configuration  ***
# =========================

@dataclass(frozen=True)
class TimeModel:
    speed: float = planner.DEFAULT_SPEED
    turn_time_per_rad: float = planner.DEFAULT_TURN_TIME
    duck_transition_time: float = planner.DEFAULT_DUCK_TIME

@dataclass(frozen=True)
class EvalSettings:
    iou_threshold: float = evalmap.DEFAULT_IOU_THRESHOLD
    min_voxels: int = evalmap.DEFAULT_MIN_VOXELS
    gt_density: float = 4000.0
    recon_density: float = 1000.0
    volumetric: bool = False

@dataclass(frozen=True)
class PipelineConfig:
    scene_spec: str
    start: tuple
    goal: tuple
    recon_mesh: str = None
    gt_cloud: str = None
    robot: RobotProfile = dataclasses.field(default_factory=RobotProfile)
    voxel_resolution: float = scene.DEFAULT_RESOLUTION
    inflate_radius: float = 0.1
    planner: PlannerConfig = dataclasses.field(default_factory=PlannerConfig)
    field: FieldConfig = dataclasses.field(default_factory=FieldConfig)
    pretrain_steps: int = 2000
    max_slope: float = DEFAULT_MAX_SLOPE
    time_model: TimeModel = dataclasses.field(default_factory=TimeModel)
    eval: EvalSettings = dataclasses.field(default_factory=EvalSettings)
    seed: int = 0
    out_dir: str = 'out'

    def __post_init__(self):
        for key in ('start', 'goal'):
            v = getattr(self, key)
            if v is None or len(v) != 2:
                raise InvalidPipelineConfig("{} must be an [x, y] pair".format(key))
            object.__setattr__(self, key, (float(v[0]), float(v[1])))
        if not (self.voxel_resolution > 0):
            raise InvalidPipelineConfig("voxel_resolution must be > 0")
        if self.inflate_radius < 0:
            raise InvalidPipelineConfig("inflate_radius must be >= 0")
        if self.pretrain_steps < 0:
            raise InvalidPipelineConfig("pretrain_steps must be >= 0")
        if not (self.max_slope > 0):
            raise InvalidPipelineConfig("max_slope must be > 0")
        if not (self.time_model.speed > 0):
            raise InvalidPipelineConfig("time_model.speed must be > 0")

    @classmethod
    def from_dict(cls, d, base_dir='.'):
        ''' Build from parsed JSON; relative paths resolve against base_dir. '''
        d = dict(d)
        d.pop('schema_version', None)
        names = set(f.name for f in fields(cls))
        unknown = sorted(set(d) - names)
        if unknown:
            raise InvalidPipelineConfig("unknown pipeline config keys: {}".format(', '.join(unknown)))
        for key in ('scene_spec', 'start', 'goal'):
            if key not in d:
                raise InvalidPipelineConfig("pipeline config needs {!r}".format(key))
        nested = (('robot', RobotProfile), ('planner', PlannerConfig), ('field', FieldConfig),
            ('time_model', TimeModel), ('eval', EvalSettings))
        try:
            for key, record in nested:
                if key in d:
                    if hasattr(record, 'from_dict'):
                        d[key] = record.from_dict(d[key])
                    else:
                        d[key] = heightmap.dataclass_from_dict(record, d[key], InvalidPipelineConfig)
        except (heightmap.InvalidProfile, planner.InvalidPlannerConfig, neural_field.InvalidConfig) as e:
            raise InvalidPipelineConfig("{}: {}".format(key, e))
        for key in ('scene_spec', 'recon_mesh', 'gt_cloud', 'out_dir'):
            if d.get(key) is not None:
                d[key] = os.path.normpath(os.path.join(base_dir, d[key]))
        return cls(**d)

    def to_dict(self):
        return asdict(self)

def read_pipeline_config(inFile, out_dir=None, seed=None):
    cfg = PipelineConfig.from_dict(util.file.read_json(inFile), os.path.dirname(os.path.abspath(inFile)))
    overrides = {}
    if out_dir is not None:
        overrides['out_dir'] = out_dir
    if seed is not None:
        overrides['seed'] = seed
    if overrides:
        d = dict((f.name, getattr(cfg, f.name)) for f in fields(cfg))
        d.update(overrides)
        cfg = PipelineConfig(**d)
    return cfg


# =========================
# ***  stages  ***
# =========================

ARTIFACTS = {
    'scene': 'scene.obj',
    'gt_cloud': 'gt_cloud.ply',
    'recon_cloud': 'recon_cloud.ply',
    'grid': 'grid.json',
    'tgrid': 'tgrid.json',
    'tgrid_raster': 'tgrid.ppm',
    'eval': 'eval.json',
    'report': 'run_report.json',
    'timings': 'timings.json',
}

def mode_artifact(kind, mode):
    ext = 'ppm' if kind == 'plan' else 'json'
    return '{}_{}.{}'.format(kind, mode, ext)


class PipelineRun(object):
    ''' One pipeline execution in cfg.out_dir. Stage timings accumulate in
        self.timings; stage failures are re-raised as StageError.
    '''

    def __init__(self, cfg):
        self.cfg = cfg
        self.timings = {}
        util.file.mkdir_p(cfg.out_dir)

    def path(self, name):
        return os.path.join(self.cfg.out_dir, ARTIFACTS.get(name, name))

    def seed(self, stage):
        return util.misc.stage_seed(self.cfg.seed, stage)

    @contextlib.contextmanager
    def stage(self, name):
        log.info("stage %s: start", name)
        t0 = time.perf_counter()
        try:
            yield
        except Exception as e:
            log.exception("stage %s failed", name)
            raise StageError(name, e)
        self.timings[name] = time.perf_counter() - t0
        log.info("stage %s: done in %.2f s", name, self.timings[name])

    def run_scene(self):
        cfg = self.cfg
        with self.stage('scene'):
            spec = util.file.read_json(cfg.scene_spec)
            truth = scene.gen_scene(spec)
            recon = scene.load_mesh(cfg.recon_mesh) if cfg.recon_mesh else truth
            scene.save_obj(recon, self.path('scene'))
            if cfg.gt_cloud:
                shutil.copyfile(cfg.gt_cloud, self.path('gt_cloud'))
            else:
                scene.save_point_cloud(scene.sample_surface(truth, cfg.eval.gt_density,
                    self.seed('gt_cloud')), self.path('gt_cloud'))
            scene.save_point_cloud(scene.sample_surface(recon, cfg.eval.recon_density,
                self.seed('recon_cloud')), self.path('recon_cloud'))

    def run_voxelize(self):
        with self.stage('voxelize'):
            grid = scene.voxelize(scene.load_mesh(self.path('scene')), self.cfg.voxel_resolution)
            scene.write_grid(grid, self.path('grid'))

    def run_segment(self):
        cfg = self.cfg
        with self.stage('segment'):
            tgrid = heightmap.segment(scene.read_grid(self.path('grid')), cfg.robot)
            if cfg.inflate_radius:
                tgrid = heightmap.inflate(tgrid, cfg.inflate_radius)
            heightmap.write_tgrid(tgrid, self.path('tgrid'))
            util.file.write_ppm(tgrid.to_rgb(), self.path('tgrid_raster'))

    def run_train_field(self, mode):
        cfg = self.cfg
        name = 'train_field_' + mode
        with self.stage(name):
            tgrid = heightmap.read_tgrid(self.path('tgrid'))
            fcfg = FieldConfig(**dict(cfg.field.to_dict(), seed=self.seed(name)))
            fld = neural_field.field_init(fcfg, tgrid.world_rect())
            if cfg.pretrain_steps:
                stats = neural_field.field_train(fld, tgrid, mode, cfg.pretrain_steps)
                log.info("%s field accuracy after %d steps: %s", mode, cfg.pretrain_steps, stats.accuracy)
            neural_field.write_field(fld, self.path(mode_artifact('field', mode)))

    def run_plan(self, mode):
        cfg = self.cfg
        name = 'plan_' + mode
        with self.stage(name):
            tgrid = heightmap.read_tgrid(self.path('tgrid'))
            fld = neural_field.read_field(self.path(mode_artifact('field', mode)))
            pcfg = PlannerConfig(**dict(cfg.planner.to_dict(), seed=self.seed(name),
                footprint_radius=cfg.robot.footprint_radius))
            seed_traj = planner.seed_path(tgrid, cfg.start, cfg.goal, mode, pcfg.n_waypoints)
            traj, stats, history = planner.optimize(seed_traj, tgrid, mode, pcfg, fld)
            traj = planner.annotate_heights(traj, tgrid, cfg.robot, cfg.max_slope)
            tm = cfg.time_model
            metrics = planner.path_metrics(traj, tm.speed, tm.turn_time_per_rad,
                tm.duck_transition_time, cfg.robot.h_max)
            planner.write_trajectory(traj, self.path(mode_artifact('traj', mode)))
            util.file.write_json(planner.plan_record(traj, metrics, stats, history),
                self.path(mode_artifact('metrics', mode)))
            util.file.write_ppm(planner.overlay_rgb(tgrid, traj), self.path(mode_artifact('plan', mode)))

    def run_evaluate(self):
        ev = self.cfg.eval
        with self.stage('evaluate'):
            mapping_time = self.timings.get('voxelize', 0.0) + self.timings.get('segment', 0.0)
            report = evalmap.evaluate(scene.read_grid(self.path('grid')),
                scene.load_point_cloud(self.path('gt_cloud')),
                scene.load_point_cloud(self.path('recon_cloud')),
                ev.iou_threshold, ev.min_voxels, ev.volumetric, mapping_time)
            util.file.write_json(report.to_dict(), self.path('eval'))

    def run_report(self):
        with self.stage('report'):
            report = build_report(self.cfg.out_dir, self.cfg.seed)
            util.file.write_json(report, self.path('report'))
        util.file.write_json(self.timings, self.path('timings'))
        return report


def reduction(flat, hat):
    ''' (flat - hat) / flat, or None when flat is 0. '''
    return (flat - hat) / flat if flat else None

def build_report(out_dir, seed):
    ''' RunReport from the artifacts in out_dir. Wall-clock values are left
        out so equal runs give equal bytes.
    '''
    metrics = {}
    for mode in MODES:
        metrics[mode] = util.file.read_json(os.path.join(out_dir, mode_artifact('metrics', mode)))
        metrics[mode].pop('schema_version', None)
    report = {'seed': seed, 'metrics': metrics}
    hat, flat = metrics[MODE_HAT], metrics[MODE_FLAT2D]
    report['reduction'] = {
        'length': reduction(flat['length'], hat['length']),
        'est_time': reduction(flat['est_time'], hat['est_time']),
        'max_curvature': reduction(flat['max_curvature'], hat['max_curvature']),
    }
    evalfn = os.path.join(out_dir, ARTIFACTS['eval'])
    if os.path.isfile(evalfn):
        ev = util.file.read_json(evalfn)
        ev.pop('schema_version', None)
        ev.pop('time_sec', None)
        report['eval'] = ev
    return report


def run_pipeline(cfg):
    ''' Run every stage in order and return the RunReport dict. '''
    run = PipelineRun(cfg)
    run.run_scene()
    run.run_voxelize()
    run.run_segment()
    for mode in MODES:
        run.run_train_field(mode)
        run.run_plan(mode)
    run.run_evaluate()
    report = run.run_report()
    r = report['reduction']
    log.info("HAT vs 2D: length reduction %s, time reduction %s", r['length'], r['est_time'])
    return report

def replan(cfg, inGrid):
    ''' Re-run segmentation, field training and planning on a new grid. '''
    run = PipelineRun(cfg)
    with run.stage('load_grid'):
        grid = scene.read_grid(inGrid)
        scene.write_grid(grid, run.path('grid'))
    run.run_segment()
    for mode in MODES:
        run.run_train_field(mode)
        run.run_plan(mode)
    return run.run_report()


# =========================
# ***  comparison  ***
# =========================

def flatten_metrics(d, prefix=''):
    ''' Numeric leaves of nested dicts keyed by dotted path. Booleans and
        lists are skipped; None leaves are kept as None.
    '''
    out = {}
    for k in sorted(d):
        v = d[k]
        key = prefix + str(k)
        if isinstance(v, dict):
            out.update(flatten_metrics(v, key + '.'))
        elif isinstance(v, bool) or isinstance(v, (list, str)):
            continue
        elif v is None or isinstance(v, (int, float)):
            out[key] = v
    return out

def compare_runs(a, b):
    ''' Per-metric deltas b - a, with the relative delta taken against a. '''
    if a.get('schema_version') != b.get('schema_version'):
        raise SchemaMismatch("schema_version {} vs {}".format(a.get('schema_version'), b.get('schema_version')))
    fa = flatten_metrics(dict((k, v) for k, v in a.items() if k != 'schema_version'))
    fb = flatten_metrics(dict((k, v) for k, v in b.items() if k != 'schema_version'))
    if set(fa) != set(fb):
        missing = sorted(set(fa) ^ set(fb))
        raise SchemaMismatch("reports differ in fields: {}".format(', '.join(missing)))
    out = {}
    for key in sorted(fa):
        va, vb = fa[key], fb[key]
        if va is None or vb is None:
            out[key] = {'a': va, 'b': vb, 'abs': None, 'rel': None}
            continue
        delta = vb - va
        out[key] = {'a': va, 'b': vb, 'abs': delta, 'rel': delta / va if va else None}
    return out

def format_comparison(diff):
    def fmt(v):
        return '-' if v is None else '{:.6g}'.format(v)
    width = max([len(k) for k in diff] + [6])
    lines = ['{:<{w}}  {:>12}  {:>12}  {:>12}  {:>12}'.format('metric', 'a', 'b', 'abs', 'rel', w=width)]
    for key, row in diff.items():
        lines.append('{:<{w}}  {:>12}  {:>12}  {:>12}  {:>12}'.format(
            key, fmt(row['a']), fmt(row['b']), fmt(row['abs']), fmt(row['rel']), w=width))
    return '\n'.join(lines)


# =========================
# ***  commands  ***
# =========================

def run_file(inConfig, out_dir=None, seed=None):
    ''' Run the whole pipeline described by a JSON config. '''
    run_pipeline(read_pipeline_config(inConfig, out_dir, seed))
    return 0
def parser_run(parser=argparse.ArgumentParser()):
    parser.add_argument('inConfig', help='Pipeline config (JSON).')
    parser.add_argument('--out_dir', default=None,
        help='Output directory. [default: out_dir from the config]')
    parser.add_argument('--seed', type=int, default=None,
        help='Root random seed. [default: seed from the config]')
    util.cmd.common_args(parser, (('loglevel',None), ('version',None)))
    util.cmd.attach_main(parser, run_file, split_args=True)
    return parser
__commands__.append(('run', parser_run))

def compare_file(inReportA, inReportB, outJson=None):
    ''' Tabulate metric deltas between two run reports. '''
    diff = compare_runs(util.file.read_json(inReportA), util.file.read_json(inReportB))
    sys.stdout.write(format_comparison(diff) + '\n')
    if outJson:
        util.file.write_json({'deltas': diff}, outJson)
    return 0
def parser_compare(parser=argparse.ArgumentParser()):
    parser.add_argument('inReportA', help='Baseline run report (JSON).')
    parser.add_argument('inReportB', help='Run report to compare (JSON).')
    parser.add_argument('outJson', nargs='?', default=None, help='Also write the deltas (JSON).')
    util.cmd.common_args(parser, (('loglevel',None), ('version',None)))
    util.cmd.attach_main(parser, compare_file, split_args=True)
    return parser
__commands__.append(('compare', parser_compare))

def replan_file(inConfig, inGrid, out_dir=None, seed=None):
    ''' Re-plan both modes after the voxel map changed. '''
    replan(read_pipeline_config(inConfig, out_dir, seed), inGrid)
    return 0
def parser_replan(parser=argparse.ArgumentParser()):
    parser.add_argument('inConfig', help='Pipeline config (JSON).')
    parser.add_argument('inGrid', help='Updated voxel grid (JSON).')
    parser.add_argument('--out_dir', default=None,
        help='Output directory. [default: out_dir from the config]')
    parser.add_argument('--seed', type=int, default=None,
        help='Root random seed. [default: seed from the config]')
    util.cmd.common_args(parser, (('loglevel',None), ('version',None)))
    util.cmd.attach_main(parser, replan_file, split_args=True)
    return parser
__commands__.append(('replan', parser_replan))


def report_file(inDir, outJson, seed=0):
    ''' Assemble a run report from the stage artifacts in a directory. '''
    util.file.write_json(build_report(inDir, seed), outJson)
    return 0
def parser_report(parser=argparse.ArgumentParser()):
    parser.add_argument('inDir', help='Directory holding metrics_<mode>.json and eval.json.')
    parser.add_argument('outJson', help='Output run report (JSON).')
    util.cmd.common_args(parser, (('loglevel',None), ('version',None), ('seed',None)))
    util.cmd.attach_main(parser, report_file, split_args=True)
    return parser
__commands__.append(('report', parser_report))


def full_parser():
    return util.cmd.make_parser(__commands__, __doc__)
if __name__ == '__main__':
    util.cmd.main_argparse(__commands__, __doc__)
