# Unit tests for neural_field.py

__author__ = "hatnav developers"

import neural_field, heightmap, scene, util.file, util.stats
from neural_field import FieldConfig, NeuralField
from heightmap import CellClass, MODE_HAT, MODE_FLAT2D
import test.oracles
import unittest, argparse
import numpy as np
import scipy.ndimage
from test import TestCaseWithTmp


def arch_tgrid():
    grid = scene.voxelize(scene.gen_scene(test.oracles.arch_scene()), 0.05)
    return heightmap.segment(grid, heightmap.RobotProfile())


class TestCommandHelp(unittest.TestCase):
    def test_help_parser_for_each_command(self):
        for cmd_name, parser_fun in neural_field.__commands__:
            parser = parser_fun(argparse.ArgumentParser())
            helpstring = parser.format_help()


class TestFieldConfig(unittest.TestCase):
    def test_defaults(self):
        cfg = FieldConfig()
        self.assertEqual(cfg.fourier_bands, 6)
        self.assertEqual(cfg.hidden_sizes, (64, 64))
        self.assertEqual(cfg.batch_size, 256)

    def test_invalid(self):
        self.assertRaises(neural_field.InvalidConfig, FieldConfig, fourier_bands=-1)
        self.assertRaises(neural_field.InvalidConfig, FieldConfig, hidden_sizes=[64, 0])
        self.assertRaises(neural_field.InvalidConfig, FieldConfig, learning_rate=0)
        self.assertRaises(neural_field.InvalidConfig, FieldConfig, batch_size=0)
        self.assertRaises(neural_field.InvalidConfig, FieldConfig.from_dict, {'layers': 3})

    def test_degenerate_rect(self):
        self.assertRaises(neural_field.InvalidConfig, neural_field.field_init,
            FieldConfig(), (0, 0, 0, 1))
        self.assertRaises(neural_field.InvalidConfig, neural_field.field_init,
            FieldConfig(), (0, 0, 1, -1))


class TestFieldInit(unittest.TestCase):
    def test_parameter_count(self):
        field = neural_field.field_init(FieldConfig(), (0, 0, 2, 2))
        self.assertEqual(field.input_dim, 26)
        self.assertEqual(field.parameter_count(), 26*64+64 + 64*64+64 + 64*2+2)

    def test_raw_coordinates_only(self):
        field = neural_field.field_init(FieldConfig(fourier_bands=0), (0, 0, 2, 2))
        self.assertEqual(field.input_dim, 2)
        self.assertEqual(field.weights[0].shape, (2, 64))

    def test_deterministic(self):
        a = neural_field.field_init(FieldConfig(seed=3), (0, 0, 2, 2))
        b = neural_field.field_init(FieldConfig(seed=3), (0, 0, 2, 2))
        c = neural_field.field_init(FieldConfig(seed=4), (0, 0, 2, 2))
        for pa, pb in zip(a.parameters(), b.parameters()):
            np.testing.assert_array_equal(pa, pb)
        self.assertFalse(np.array_equal(a.weights[0], c.weights[0]))
        for bias in a.biases:
            self.assertFalse(np.any(bias))


class TestFieldForward(unittest.TestCase):
    def setUp(self):
        self.field = neural_field.field_init(FieldConfig(seed=1), (-1, 0, 3, 2))

    def test_range(self):
        pts = np.random.default_rng(0).uniform(-3, 5, size=(500, 2))
        probs = neural_field.field_forward(self.field, pts)
        self.assertEqual(probs.shape, (500, 2))
        self.assertTrue(np.all((probs > 0) & (probs < 1)))

    def test_single_point(self):
        pb, pd = neural_field.field_forward(self.field, [0.5, 0.5])
        probs = self.field.forward([[0.5, 0.5]])
        self.assertEqual((pb, pd), (probs[0,0], probs[0,1]))

    def test_normalization(self):
        u = self.field.normalize([[-1, 0], [3, 2], [1, 1]])
        np.testing.assert_allclose(u, [[-1, -1], [1, 1], [0, 0]])


class TestFieldInputGrad(unittest.TestCase):
    def check_against_differences(self, field, pts):
        grad, probs = field.input_grad(pts)
        np.testing.assert_allclose(probs, field.forward(pts))
        fd = np.zeros_like(grad)
        for axis in range(2):
            h = 1e-5 / field.scale[axis]
            step = np.zeros(2)
            step[axis] = h
            fd[:,:,axis] = (field.forward(pts + step) - field.forward(pts - step)) / (2*h)
        err = np.linalg.norm((grad - fd).reshape(len(pts), -1), axis=1)
        size = np.maximum(np.linalg.norm(fd.reshape(len(pts), -1), axis=1), 1e-8)
        self.assertLess(np.max(err / size), 1e-4)

    def test_random_fields(self):
        rng = np.random.default_rng(5)
        for seed in range(3):
            field = neural_field.field_init(FieldConfig(seed=seed), (0, 0, 2, 2))
            self.check_against_differences(field, rng.uniform(0, 2, size=(100, 2)))

    def test_trained_field(self):
        field = neural_field.field_init(FieldConfig(seed=2), (0, 0, 2, 2))
        tgrid = test.oracles.uniform_tgrid((20, 20), res=0.1)
        tgrid.classes[8:12, :] = CellClass.BLOCKED
        neural_field.field_train(field, tgrid, MODE_HAT, 100)
        pts = np.random.default_rng(6).uniform(0, 2, size=(100, 2))
        self.check_against_differences(field, pts)

    def test_single_point(self):
        field = neural_field.field_init(FieldConfig(), (0, 0, 2, 2))
        gb, gd = neural_field.field_input_grad(field, [0.3, 1.1])
        grad, _ = field.input_grad([[0.3, 1.1]])
        np.testing.assert_array_equal(gb, grad[0,0])
        np.testing.assert_array_equal(gd, grad[0,1])

    def test_constant_output(self):
        field = neural_field.field_init(FieldConfig(), (0, 0, 2, 2))
        field.weights[-1][...] = 0
        grad = neural_field.field_input_grad(field, np.random.default_rng(1).uniform(0, 2, (20, 2)))
        self.assertFalse(np.any(grad))

    def test_continuous(self):
        field = neural_field.field_init(FieldConfig(seed=9), (0, 0, 2, 2))
        pts = np.random.default_rng(2).uniform(0, 2, size=(50, 2))
        g0, _ = field.input_grad(pts)
        g1, _ = field.input_grad(pts + 1e-9)
        self.assertLess(np.max(np.abs(g1 - g0)), 1e-6)


class TestFieldLabels(unittest.TestCase):
    def test_modes(self):
        tgrid = test.oracles.uniform_tgrid((3, 1))
        tgrid.classes[:] = [[CellClass.FREE], [CellClass.DUCK], [CellClass.BLOCKED]]
        _, hat = neural_field.field_labels(tgrid, MODE_HAT)
        _, flat = neural_field.field_labels(tgrid, MODE_FLAT2D)
        np.testing.assert_array_equal(hat, [[0, 0], [0, 1], [1, 0]])
        np.testing.assert_array_equal(flat, [[0, 0], [1, 0], [1, 0]])


class TestFieldTrain(unittest.TestCase):
    def test_uniform_free(self):
        tgrid = test.oracles.uniform_tgrid((20, 20))
        field = neural_field.field_init(FieldConfig(), tgrid.world_rect())
        stats = neural_field.field_train(field, tgrid, MODE_HAT, 200)
        self.assertEqual(len(stats.losses), 200)
        self.assertLess(stats.losses[-1], 0.01)
        self.assertTrue(all(l >= 0 for l in stats.losses))
        self.assertEqual(stats.accuracy, {'block': 1.0, 'duck': 1.0})
        ma = util.stats.moving_average(stats.losses, 50)
        self.assertLess(ma[-1], ma[0])

    def test_all_blocked(self):
        tgrid = test.oracles.uniform_tgrid((20, 20), cls=CellClass.BLOCKED)
        field = neural_field.field_init(FieldConfig(), tgrid.world_rect())
        neural_field.field_train(field, tgrid, MODE_HAT, 300)
        probs = field.forward(tgrid.cell_centers())
        self.assertTrue(np.all(probs[:,0] > 0.9))

    def test_deterministic(self):
        tgrid = arch_tgrid()
        runs = []
        for i in range(2):
            field = neural_field.field_init(FieldConfig(seed=7), tgrid.world_rect())
            stats = neural_field.field_train(field, tgrid, MODE_HAT, 30)
            runs.append((field, stats))
        self.assertEqual(runs[0][1].losses, runs[1][1].losses)
        for pa, pb in zip(runs[0][0].parameters(), runs[1][0].parameters()):
            np.testing.assert_array_equal(pa, pb)

    def test_training_continues_across_calls(self):
        tgrid = arch_tgrid()
        a = neural_field.field_init(FieldConfig(), tgrid.world_rect())
        b = neural_field.field_init(FieldConfig(), tgrid.world_rect())
        neural_field.field_train(a, tgrid, MODE_HAT, 40)
        neural_field.field_train(b, tgrid, MODE_HAT, 25)
        neural_field.field_train(b, tgrid, MODE_HAT, 15)
        for pa, pb in zip(a.parameters(), b.parameters()):
            np.testing.assert_array_equal(pa, pb)

    def test_arch_hat_fit(self):
        tgrid = arch_tgrid()
        field = neural_field.field_init(FieldConfig(), tgrid.world_rect())
        stats = neural_field.field_train(field, tgrid, MODE_HAT, 2000)
        self.assertGreaterEqual(stats.accuracy['block'], 0.95)
        self.assertGreaterEqual(stats.accuracy['duck'], 0.95)

    def test_arch_flat2d_blocks_lintel(self):
        tgrid = arch_tgrid()
        duck = tgrid.cell_centers()[tgrid.classes.ravel() == CellClass.DUCK]
        self.assertEqual(len(duck), 7*9)
        field = neural_field.field_init(FieldConfig(), tgrid.world_rect())
        neural_field.field_train(field, tgrid, MODE_FLAT2D, 2000)
        probs = field.forward(duck)
        self.assertGreaterEqual(np.mean(probs[:,0] > 0.5), 0.9)
        self.assertTrue(np.all(field.forward(tgrid.cell_centers())[:,1] < 0.5))

    def test_bad_steps(self):
        tgrid = test.oracles.uniform_tgrid((4, 4))
        field = neural_field.field_init(FieldConfig(), tgrid.world_rect())
        self.assertRaises(ValueError, neural_field.field_train, field, tgrid, MODE_HAT, 0)


class TestArchFits(unittest.TestCase):
    ''' HAT and FLAT2D fields trained alike on the arch grid '''

    @classmethod
    def setUpClass(cls):
        cls.tgrid = arch_tgrid()
        cls.fields = {}
        for mode in (MODE_HAT, MODE_FLAT2D):
            field = neural_field.field_init(FieldConfig(seed=1), cls.tgrid.world_rect())
            neural_field.field_train(field, cls.tgrid, mode, 2000)
            cls.fields[mode] = field

    def test_duck_cells_never_freer_in_2d(self):
        duck = self.tgrid.cell_centers()[self.tgrid.classes.ravel() == CellClass.DUCK]
        hat = self.fields[MODE_HAT].forward(duck)[:,0]
        flat = self.fields[MODE_FLAT2D].forward(duck)[:,0]
        self.assertTrue(np.all(flat >= hat - 0.1))

    def test_errors_hug_class_boundaries(self):
        dims = self.tgrid.dims
        struct = np.ones((3, 3), dtype=bool)
        for mode, field in self.fields.items():
            points, labels = neural_field.field_labels(self.tgrid, mode)
            probs = field.forward(points)
            for c, name in enumerate(neural_field.CHANNELS):
                truth = labels[:,c].reshape(dims) > 0.5
                wrong = (probs[:,c].reshape(dims) > 0.5) != truth
                near = (scipy.ndimage.binary_dilation(truth, structure=struct)
                    & scipy.ndimage.binary_dilation(~truth, structure=struct))
                self.assertLessEqual(wrong.mean(), 0.05, (mode, name))
                self.assertFalse(np.any(wrong & ~near), (mode, name))


class TestFieldCommands(TestCaseWithTmp):
    def test_checkpoint_resumes_training(self):
        tgrid = arch_tgrid()
        a = neural_field.field_init(FieldConfig(seed=2), tgrid.world_rect())
        neural_field.field_train(a, tgrid, MODE_HAT, 20)
        fn = util.file.mkstempfname('.json')
        neural_field.write_field(a, fn)
        b = neural_field.read_field(fn)
        for pa, pb in zip(a.parameters(), b.parameters()):
            np.testing.assert_array_equal(pa, pb)
        neural_field.field_train(a, tgrid, MODE_HAT, 10)
        neural_field.field_train(b, tgrid, MODE_HAT, 10)
        for pa, pb in zip(a.parameters(), b.parameters()):
            np.testing.assert_array_equal(pa, pb)

    def test_train_and_eval(self):
        tgrid = arch_tgrid()
        tgridfn = util.file.mkstempfname('.json')
        heightmap.write_tgrid(tgrid, tgridfn)
        fieldfn = util.file.mkstempfname('.json')
        statsfn = util.file.mkstempfname('.json')
        args = neural_field.parser_train(argparse.ArgumentParser()).parse_args(
            [tgridfn, fieldfn, '--mode', 'flat2d', '--steps', '25', '--seed', '4', '--stats', statsfn])
        args.func_main(args)
        field = neural_field.read_field(fieldfn)
        self.assertEqual(field.config.seed, 4)
        self.assertEqual(field.world_rect, tuple(float(v) for v in tgrid.world_rect()))
        self.assertEqual(len(util.file.read_json(statsfn)['losses']), 25)

        cfgfn = util.file.mkstempfname('.json')
        util.file.write_json({'seed': 9}, cfgfn)
        args = neural_field.parser_train(argparse.ArgumentParser()).parse_args(
            [tgridfn, fieldfn, '--steps', '5', '--config', cfgfn])
        self.assertIsNone(args.seed)
        args.func_main(args)
        self.assertEqual(neural_field.read_field(fieldfn).config.seed, 9)

        ppm = util.file.mkstempfname('.ppm')
        args = neural_field.parser_eval(argparse.ArgumentParser()).parse_args(
            [fieldfn, ppm, '--resolution', '0.1'])
        args.func_main(args)
        img = util.file.read_ppm(ppm)
        self.assertEqual(img.shape, (21, 21, 3))
        self.assertFalse(np.any(img[:,:,1]))
