# Unit tests for heightmap.py

__author__ = "hatnav developers"

import heightmap, scene, util.file
from heightmap import CellClass, RobotProfile
import test.oracles
import unittest, argparse, math, time
import numpy as np
from test import TestCaseWithTmp


def scene_grid(make, res=0.05):
    return scene.voxelize(scene.gen_scene(make()), res)


class TestCommandHelp(unittest.TestCase):
    def test_help_parser_for_each_command(self):
        for cmd_name, parser_fun in heightmap.__commands__:
            parser = parser_fun(argparse.ArgumentParser())
            helpstring = parser.format_help()


class TestRobotProfile(unittest.TestCase):
    def test_defaults(self):
        p = RobotProfile()
        self.assertEqual((p.h_max, p.h_min, p.step_max), (0.30, 0.15, 0.08))

    def test_invalid(self):
        self.assertRaises(heightmap.InvalidProfile, RobotProfile, h_min=0.4)
        self.assertRaises(heightmap.InvalidProfile, RobotProfile, h_min=0)
        self.assertRaises(heightmap.InvalidProfile, RobotProfile, step_max=0.15)
        self.assertRaises(heightmap.InvalidProfile, RobotProfile, footprint_radius=0)
        self.assertRaises(heightmap.InvalidProfile, RobotProfile, safety_margin=-0.01)

    def test_from_dict(self):
        p = RobotProfile.from_dict({'h_max': 0.4, 'schema_version': 1})
        self.assertEqual(p.h_max, 0.4)
        self.assertRaises(heightmap.InvalidProfile, RobotProfile.from_dict, {'height': 0.4})


class TestEstimateFloor(unittest.TestCase):
    def test_flat_slab(self):
        grid = scene.VoxelGrid([0,0,0], 0.05, (10,10,8))
        grid.occupancy[:,:,0] = True
        self.assertAlmostEqual(heightmap.estimate_floor(grid), 0.025)

    def test_slab_majority(self):
        grid = scene.VoxelGrid([0,0,0], 0.05, (10,10,8))
        grid.occupancy[:6,:,0] = True
        grid.occupancy[6:,:,5] = True
        self.assertAlmostEqual(heightmap.estimate_floor(grid), 0.025)

    def test_tie_goes_low(self):
        grid = scene.VoxelGrid([0,0,0], 0.05, (10,10,8))
        grid.occupancy[:5,:,3] = True
        grid.occupancy[5:,:,1] = True
        self.assertAlmostEqual(heightmap.estimate_floor(grid), 0.075)

    def test_empty(self):
        grid = scene.VoxelGrid([0,0,0], 0.05, (4,4,4))
        self.assertRaises(heightmap.EmptyGrid, heightmap.estimate_floor, grid)

    def test_table_scene(self):
        grid = scene_grid(test.oracles.table_scene)
        self.assertAlmostEqual(heightmap.estimate_floor(grid), 0.0125)

    def test_stable_under_small_obstacles(self):
        base = scene.voxelize(scene.gen_scene({'primitives': [
            {'type': 'floor', 'width': 3, 'depth': 3}]}), 0.05)
        rng = np.random.default_rng(4)
        prims = [{'type': 'floor', 'width': 3, 'depth': 3}]
        for _ in range(6):
            c = rng.uniform(0.4, 2.6, size=2)
            prims.append({'type': 'box', 'center': [c[0], c[1], 0.3],
                'extents': [0.3, 0.3, 0.2]})
        cluttered = scene.voxelize(scene.gen_scene({'primitives': prims}), 0.05,
            bounds=base.bounds())
        self.assertEqual(heightmap.estimate_floor(cluttered), heightmap.estimate_floor(base))


class TestAnalyzeColumn(unittest.TestCase):
    def setUp(self):
        self.profile = RobotProfile(h_max=0.30, h_min=0.15, step_max=0.08, safety_margin=0.02)
        self.z = 0.025 + 0.05*np.arange(10)

    def test_empty_column(self):
        cell = heightmap.analyze_column(np.zeros(10, dtype=bool), self.z, 0.0, self.profile)
        self.assertEqual(cell.cell_class, CellClass.FREE)
        self.assertEqual(cell.support_height, 0.0)
        self.assertEqual(cell.clearance, math.inf)
        self.assertEqual(cell.required_height, 0.30)

    def test_overhang(self):
        occ = (self.z > 0.2) & (self.z < 0.4)
        cell = heightmap.analyze_column(occ, self.z, 0.0, self.profile)
        self.assertEqual(cell.cell_class, CellClass.DUCK)
        self.assertAlmostEqual(cell.clearance, 0.20)
        self.assertAlmostEqual(cell.required_height, 0.18)
        expected = test.oracles.classify_column(list(occ), 0.0, 0.05, 0.0, self.profile)
        self.assertEqual(expected[0], 1)
        self.assertAlmostEqual(expected[3], cell.required_height)

    def test_wall(self):
        cell = heightmap.analyze_column(np.ones(10, dtype=bool), self.z, 0.0, self.profile)
        self.assertEqual(cell.cell_class, CellClass.BLOCKED)
        self.assertAlmostEqual(cell.support_height, 0.5)
        self.assertTrue(math.isnan(cell.required_height))

    def test_step_over_then_duck(self):
        # 0.05 m step, then an overhang 0.25 m above it
        occ = np.zeros(10, dtype=bool)
        occ[0] = True
        occ[6:] = True
        cell = heightmap.analyze_column(occ, self.z, 0.0, self.profile)
        self.assertEqual(cell.cell_class, CellClass.DUCK)
        self.assertAlmostEqual(cell.support_height, 0.05)
        self.assertAlmostEqual(cell.clearance, 0.25)
        self.assertAlmostEqual(cell.required_height, 0.23)

    def test_low_gap_blocked(self):
        occ = np.zeros(10, dtype=bool)
        occ[3:] = True
        cell = heightmap.analyze_column(occ, self.z, 0.0, self.profile)
        self.assertEqual(cell.cell_class, CellClass.BLOCKED)

    def test_non_uniform(self):
        z = np.array([0.025, 0.075, 0.2])
        self.assertRaises(heightmap.NonUniformSpacing, heightmap.analyze_column,
            np.zeros(3, dtype=bool), z, 0.0, self.profile)
        self.assertRaises(heightmap.NonUniformSpacing, heightmap.analyze_column,
            np.zeros(3, dtype=bool), z[::-1], 0.0, self.profile)


class TestSegment(unittest.TestCase):
    def test_oracle_equivalence(self):
        profile = RobotProfile()
        t0 = time.time()
        for name, make in sorted(test.oracles.ORACLE_SCENES.items()):
            mesh = scene.gen_scene(make())
            grid = scene.voxelize(mesh, 0.05)
            tgrid = heightmap.segment(grid, profile)
            self.assertLessEqual(tgrid.dims[0]*tgrid.dims[1], 100*100)
            exact = test.oracles.voxelize_exact(mesh, grid)
            cls, req = test.oracles.segment_exact(exact, grid, tgrid.floor_z, profile)
            np.testing.assert_array_equal(tgrid.classes, cls, err_msg=name)
            np.testing.assert_allclose(tgrid.required, req, atol=1e-12, err_msg=name)
        self.assertLess(time.time() - t0, 60)

    def test_arch_classes(self):
        tgrid = heightmap.segment(scene_grid(test.oracles.arch_scene), RobotProfile())
        under = tgrid.cell(*tgrid.cell_of(1.0125, 1.0125))
        self.assertEqual(under.cell_class, CellClass.DUCK)
        self.assertLessEqual(abs(under.required_height - 0.23), 0.05 + 1e-9)
        self.assertEqual(tgrid.cell(*tgrid.cell_of(1.0, 0.73)).cell_class, CellClass.BLOCKED)
        self.assertEqual(tgrid.cell(*tgrid.cell_of(1.0, 1.29)).cell_class, CellClass.BLOCKED)
        self.assertEqual(tgrid.cell(*tgrid.cell_of(0.3, 0.3)).cell_class, CellClass.FREE)
        self.assertEqual(tgrid.cell(*tgrid.cell_of(1.7, 1.0)).cell_class, CellClass.FREE)
        counts = tgrid.class_counts()
        # 7 cells along the passage by 9 across the opening
        self.assertEqual(counts["DUCK"], 7*9)

    def test_low_box_step_over(self):
        tgrid = heightmap.segment(scene_grid(test.oracles.low_box_scene), RobotProfile())
        cell = tgrid.cell(*tgrid.cell_of(1.0, 1.0))
        self.assertEqual(cell.cell_class, CellClass.FREE)
        self.assertAlmostEqual(cell.support_height, 0.075)
        self.assertEqual(tgrid.class_counts()['BLOCKED'], 0)

    def test_table_duck(self):
        tgrid = heightmap.segment(scene_grid(test.oracles.table_scene), RobotProfile())
        cell = tgrid.cell(*tgrid.cell_of(1.0, 1.0))
        self.assertEqual(cell.cell_class, CellClass.DUCK)
        self.assertAlmostEqual(cell.required_height, 0.23)
        self.assertEqual(tgrid.cell(*tgrid.cell_of(0.7, 0.7)).cell_class, CellClass.BLOCKED)

    def test_no_duck_when_heights_equal(self):
        profile = RobotProfile(h_min=0.3, h_max=0.3)
        for make in (test.oracles.arch_scene, test.oracles.table_scene, test.oracles.room_scene):
            tgrid = heightmap.segment(scene_grid(make), profile)
            self.assertEqual(tgrid.class_counts()['DUCK'], 0)

    def test_duck_bound(self):
        profile = RobotProfile()
        for name, make in sorted(test.oracles.ORACLE_SCENES.items()):
            tgrid = heightmap.segment(scene_grid(make), profile)
            duck = tgrid.classes == CellClass.DUCK
            free = tgrid.classes == CellClass.FREE
            self.assertTrue(np.all(tgrid.required[duck] >= profile.h_min))
            self.assertTrue(np.all(tgrid.required[duck] < profile.h_max))
            self.assertTrue(np.all(tgrid.required[duck] + profile.safety_margin <= tgrid.clearance[duck] + 1e-9))
            self.assertTrue(np.all(tgrid.required[free] == profile.h_max))
            self.assertTrue(np.all(np.isnan(tgrid.required[tgrid.classes == CellClass.BLOCKED])))

    def test_profile_monotonicity(self):
        grids = [scene_grid(make) for make in (test.oracles.arch_scene,
            test.oracles.table_scene, test.oracles.room_scene)]
        base = RobotProfile(h_max=0.3, h_min=0.15, step_max=0.08)
        for grid in grids:
            ref = heightmap.segment(grid, base).classes
            for h_min in (0.18, 0.22, 0.3):
                cls = heightmap.segment(grid, RobotProfile(h_max=0.3, h_min=h_min, step_max=0.08)).classes
                self.assertTrue(np.all(cls[ref == CellClass.BLOCKED] == CellClass.BLOCKED))
            for step_max in (0.05, 0.02, 0.0):
                cls = heightmap.segment(grid, RobotProfile(h_max=0.3, h_min=0.15, step_max=step_max)).classes
                self.assertFalse(np.any((ref == CellClass.BLOCKED) & (cls == CellClass.FREE)))

    def test_lower_step_blocks_low_box(self):
        grid = scene_grid(test.oracles.low_box_scene)
        tgrid = heightmap.segment(grid, RobotProfile(step_max=0.05))
        self.assertEqual(tgrid.cell(*tgrid.cell_of(1.0, 1.0)).cell_class, CellClass.BLOCKED)

    def test_empty_grid(self):
        grid = scene.VoxelGrid([0,0,0], 0.05, (4,4,4))
        self.assertRaises(heightmap.EmptyGrid, heightmap.segment, grid, RobotProfile())


def inflate_brute_force(tgrid, r):
    nx, ny = tgrid.dims
    cls = tgrid.classes.copy()
    req = tgrid.required.copy()
    for ix in range(nx):
        for iy in range(ny):
            win = (slice(max(0, ix-r), ix+r+1), slice(max(0, iy-r), iy+r+1))
            c = tgrid.classes[win]
            if np.any(c == CellClass.BLOCKED):
                cls[ix, iy] = CellClass.BLOCKED
                req[ix, iy] = np.nan
            elif np.any(c == CellClass.DUCK):
                cls[ix, iy] = CellClass.DUCK
                req[ix, iy] = tgrid.required[win][c == CellClass.DUCK].min()
    return cls, req


class TestInflate(unittest.TestCase):
    def test_zero_radius(self):
        tgrid = heightmap.segment(scene_grid(test.oracles.arch_scene), RobotProfile())
        out = heightmap.inflate(tgrid, 0)
        np.testing.assert_array_equal(out.classes, tgrid.classes)
        np.testing.assert_array_equal(out.required, tgrid.required)

    def test_single_cell(self):
        n = 7
        classes = np.zeros((n, n), dtype=np.int8)
        classes[3, 3] = CellClass.BLOCKED
        req = np.where(classes == 0, 0.3, np.nan)
        tgrid = heightmap.TraversabilityGrid([0, 0], 0.05, 0.0, classes,
            np.zeros((n, n)), np.full((n, n), np.inf), req)
        out = heightmap.inflate(tgrid, 0.05)
        expected = np.zeros((n, n), dtype=np.int8)
        expected[2:5, 2:5] = CellClass.BLOCKED
        np.testing.assert_array_equal(out.classes, expected)

    def test_arch_band(self):
        profile = RobotProfile()
        tgrid = heightmap.segment(scene_grid(test.oracles.arch_scene), profile)
        out = heightmap.inflate(tgrid, 0.15)
        cls, req = inflate_brute_force(tgrid, 3)
        np.testing.assert_array_equal(out.classes, cls)
        np.testing.assert_allclose(out.required, req)
        # DUCK band along the passage grows by 3 cells on each side
        ix, iy = tgrid.cell_of(1.0125, 1.0125)
        along = out.classes[:, iy]
        self.assertEqual(int((along == CellClass.DUCK).sum()),
            int((tgrid.classes[:, iy] == CellClass.DUCK).sum()) + 6)

    def test_never_downgrades(self):
        profile = RobotProfile()
        for name, make in sorted(test.oracles.ORACLE_SCENES.items()):
            tgrid = heightmap.segment(scene_grid(make), profile)
            out = heightmap.inflate(tgrid, 0.1)
            self.assertTrue(np.all(out.classes >= tgrid.classes), name)
            duck = out.classes == CellClass.DUCK
            self.assertTrue(np.all(out.required[duck] + profile.safety_margin <= out.clearance[duck] + 1e-9))


class TestSegmentCommands(TestCaseWithTmp):
    def test_segment_and_floor(self):
        gridfn = util.file.mkstempfname('.json')
        scene.write_grid(scene_grid(test.oracles.arch_scene), gridfn)
        out = util.file.mkstempfname('.json')
        ppm = util.file.mkstempfname('.ppm')
        args = heightmap.parser_segment(argparse.ArgumentParser()).parse_args(
            [gridfn, out, '--inflate', '0.1', '--raster', ppm])
        args.func_main(args)
        tgrid = heightmap.read_tgrid(out)
        direct = heightmap.inflate(heightmap.segment(scene.read_grid(gridfn), RobotProfile()), 0.1)
        np.testing.assert_array_equal(tgrid.classes, direct.classes)
        np.testing.assert_array_equal(tgrid.clearance, direct.clearance)
        np.testing.assert_array_equal(tgrid.required, direct.required)
        img = util.file.read_ppm(ppm)
        self.assertEqual(img.shape, (tgrid.dims[1], tgrid.dims[0], 3))

        floorfn = util.file.mkstempfname('.json')
        args = heightmap.parser_floor(argparse.ArgumentParser()).parse_args([gridfn, floorfn])
        args.func_main(args)
        self.assertAlmostEqual(util.file.read_json(floorfn)['floor_z'], 0.0125)

    def test_profile_file(self):
        gridfn = util.file.mkstempfname('.json')
        scene.write_grid(scene_grid(test.oracles.arch_scene), gridfn)
        prof = util.file.mkstempfname('.json')
        util.file.write_json({'h_min': 0.3, 'h_max': 0.3}, prof)
        out = util.file.mkstempfname('.json')
        args = heightmap.parser_segment(argparse.ArgumentParser()).parse_args(
            [gridfn, out, '--profile', prof])
        args.func_main(args)
        self.assertEqual(heightmap.read_tgrid(out).class_counts()['DUCK'], 0)
