#!/usr/bin/env python
''' Neural collision field. A small fully-connected network maps a position
    in the map plane to two probabilities: that the robot is blocked there,
    and that it must lower its body there. The field is fitted online to the
    labels of a traversability grid and differentiated with respect to its
    input by the trajectory optimizer.
'''

__author__ = "hatnav developers"
__commands__ = []

import argparse, logging, math, zlib
from dataclasses import dataclass, asdict
import numpy as np
import scipy.special
import util.cmd, util.file, util.misc, util.stats
import heightmap
from heightmap import CellClass, MODE_HAT, MODE_FLAT2D, MODES

log = logging.getLogger(__name__)

CHANNELS = ('block', 'duck')

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class InvalidConfig(Exception):
    pass

class TrainingDiverged(Exception):
    pass


@dataclass(frozen=True)
class FieldConfig:
    fourier_bands: int = 6
    hidden_sizes: tuple = (64, 64)
    learning_rate: float = 1e-3
    batch_size: int = 256
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'hidden_sizes', tuple(int(w) for w in self.hidden_sizes))
        if int(self.fourier_bands) != self.fourier_bands or self.fourier_bands < 0:
            raise InvalidConfig("fourier_bands must be a non-negative integer")
        if any(w < 1 for w in self.hidden_sizes):
            raise InvalidConfig("hidden layer widths must be >= 1, got {}".format(self.hidden_sizes))
        if not (self.learning_rate > 0):
            raise InvalidConfig("learning_rate must be > 0")
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise InvalidConfig("batch_size must be a positive integer")

    @classmethod
    def from_dict(cls, d):
        return heightmap.dataclass_from_dict(cls, d, InvalidConfig)

    def to_dict(self):
        d = asdict(self)
        d['hidden_sizes'] = list(self.hidden_sizes)
        return d

def read_field_config(inFile=None):
    if inFile is None:
        return FieldConfig()
    return FieldConfig.from_dict(util.file.read_json(inFile))


@dataclass
class TrainStats:
    losses: list
    accuracy: dict

    def smoothed(self, window=50):
        return util.stats.moving_average(self.losses, min(window, len(self.losses)))

    def to_dict(self):
        return {'losses': list(self.losses), 'losses_smoothed': self.smoothed(),
            'accuracy': dict(self.accuracy)}


def field_labels(tgrid, mode):
    ''' Cell centres and their (block, duck) targets. In 2D mode every cell
        the robot cannot cross at full height counts as an obstacle.
    '''
    cls = tgrid.classes.ravel()
    if mode == MODE_HAT:
        labels = np.stack([cls == CellClass.BLOCKED, cls == CellClass.DUCK], axis=1)
    elif mode == MODE_FLAT2D:
        labels = np.stack([cls != CellClass.FREE, np.zeros(cls.shape, dtype=bool)], axis=1)
    else:
        raise ValueError("unknown planning mode {!r}".format(mode))
    return tgrid.cell_centers(), labels.astype(float)


class NeuralField(object):
    ''' MLP over Fourier-encoded, normalized (x, y). Outputs are logits for
        the block and duck channels; probabilities are their logistic.
    '''

    def __init__(self, config, world_rect):
        self.config = config
        lo = np.array(world_rect[:2], dtype=float)
        hi = np.array(world_rect[2:], dtype=float)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and np.all(hi > lo)):
            raise InvalidConfig("degenerate world rectangle {}".format(list(world_rect)))
        self.lo, self.hi = lo, hi
        self.scale = 2.0 / (hi - lo)
        sizes = [self.input_dim] + list(config.hidden_sizes) + [len(CHANNELS)]
        rng = np.random.default_rng(config.seed)
        self.weights = []
        self.biases = []
        for n_in, n_out in zip(sizes[:-1], sizes[1:]):
            limit = math.sqrt(6.0 / (n_in + n_out))
            self.weights.append(rng.uniform(-limit, limit, size=(n_in, n_out)))
            self.biases.append(np.zeros(n_out))
        self.reset_training()

    @property
    def input_dim(self):
        return 2 * (2*self.config.fourier_bands + 1)

    @property
    def world_rect(self):
        return (float(self.lo[0]), float(self.lo[1]), float(self.hi[0]), float(self.hi[1]))

    def parameters(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def parameter_count(self):
        return sum(p.size for p in self.parameters())

    def normalize(self, points):
        return (np.asarray(points, dtype=float).reshape(-1, 2) - self.lo) * self.scale - 1.0

    # ---- forward ----

    def encode(self, u, tangent=False):
        ''' Features [u, sin(2^k pi u), cos(2^k pi u) for k < L]; with
            tangent=True also d(features)/du as (n, D, 2).
        '''
        feats = [u]
        if tangent:
            eye = np.broadcast_to(np.eye(2), (len(u), 2, 2))
            tans = [eye]
        for k in range(self.config.fourier_bands):
            freq = (2.0**k) * math.pi
            a = freq * u
            s, c = np.sin(a), np.cos(a)
            feats.extend([s, c])
            if tangent:
                tans.append(eye * (freq*c)[:,:,None])
                tans.append(eye * (-freq*s)[:,:,None])
        if tangent:
            return np.concatenate(feats, axis=1), np.concatenate(tans, axis=1)
        return np.concatenate(feats, axis=1)

    def _layers(self, feats):
        ''' Returns (pre-activations, activations); activations[0] is the input. '''
        acts = [feats]
        pre = []
        h = feats
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            pre.append(z)
            if i < last:
                h = np.logaddexp(0.0, z)
                acts.append(h)
        return pre, acts

    def logits(self, points):
        pre, _ = self._layers(self.encode(self.normalize(points)))
        return pre[-1]

    def forward(self, points):
        ''' (n, 2) points -> (n, 2) probabilities [p_block, p_duck]. '''
        return scipy.special.expit(self.logits(points))

    def input_grad(self, points):
        ''' Exact gradient of the probabilities with respect to the world
            coordinates: (n, channel, axis). Also returns the probabilities.
        '''
        feats, tan = self.encode(self.normalize(points), tangent=True)
        n = len(feats)
        # tangents as (n, axis, width) so each layer is one matrix product
        tan = np.ascontiguousarray(tan.transpose(0, 2, 1))
        h = feats
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            tan = (tan.reshape(2*n, w.shape[0]) @ w).reshape(n, 2, w.shape[1])
            if i < last:
                tan = tan * scipy.special.expit(z)[:,None,:]
                h = np.logaddexp(0.0, z)
        p = scipy.special.expit(z)
        grad = (p * (1.0 - p))[:,:,None] * tan.transpose(0, 2, 1) * self.scale[None,None,:]
        return grad, p

    # ---- training ----

    def reset_training(self):
        ''' Forget optimizer moments and the batch stream. '''
        self._m = [np.zeros_like(p) for p in self.parameters()]
        self._v = [np.zeros_like(p) for p in self.parameters()]
        self._t = 0
        self._rng = np.random.default_rng([self.config.seed, 1])
        self._order = np.zeros(0, dtype=np.int64)
        self._cursor = 0
        self._stream_key = None

    def _next_batch(self, n):
        idx = []
        need = min(self.config.batch_size, n)
        while len(idx) < need:
            if self._cursor >= len(self._order):
                self._order = self._rng.permutation(n)
                self._cursor = 0
            take = self._order[self._cursor:self._cursor + need - len(idx)]
            self._cursor += len(take)
            idx.extend(take.tolist())
        return np.array(idx, dtype=np.int64)

    def loss_and_grads(self, points, labels):
        ''' Mean over the batch of the per-point cross-entropy summed over
            both channels, and its parameter gradients.
        '''
        pre, acts = self._layers(self.encode(self.normalize(points)))
        z = pre[-1]
        n = len(z)
        loss = float(np.sum(np.logaddexp(0.0, z) - labels*z) / n)
        dz = (scipy.special.expit(z) - labels) / n
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.weights)
        for i in range(len(self.weights)-1, -1, -1):
            grads_w[i] = acts[i].T @ dz
            grads_b[i] = dz.sum(axis=0)
            if i > 0:
                dz = (dz @ self.weights[i].T) * scipy.special.expit(pre[i-1])
        grads = []
        for gw, gb in zip(grads_w, grads_b):
            grads.extend([gw, gb])
        return loss, grads

    def train_step(self, points, labels):
        loss, grads = self.loss_and_grads(points, labels)
        self._t += 1
        lr = self.config.learning_rate
        bc1 = 1.0 - ADAM_BETA1**self._t
        bc2 = 1.0 - ADAM_BETA2**self._t
        for p, g, m, v in zip(self.parameters(), grads, self._m, self._v):
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g*g
            p -= lr * (m/bc1) / (np.sqrt(v/bc2) + ADAM_EPS)
        if not all(np.all(np.isfinite(p)) for p in self.parameters()):
            raise TrainingDiverged("non-finite parameters after step {}".format(self._t))
        return loss

    def train(self, tgrid, mode, steps):
        ''' Run `steps` minibatch updates on the grid labels for `mode`.
            Training state carries over between calls on the same labels.
        '''
        if steps < 1:
            raise ValueError("steps must be >= 1")
        points, labels = field_labels(tgrid, mode)
        if len(points) == 0:
            raise heightmap.EmptyGrid("traversability grid has no cells")
        key = [mode, len(points), zlib.crc32(labels.tobytes()) & 0xffffffff]
        if key != self._stream_key:
            self._order = np.zeros(0, dtype=np.int64)
            self._cursor = 0
            self._stream_key = key
        losses = []
        for step in range(steps):
            idx = self._next_batch(len(points))
            losses.append(self.train_step(points[idx], labels[idx]))
            if (step+1) % 500 == 0:
                log.debug("field step %d/%d loss %.5f", step+1, steps, losses[-1])
        return TrainStats(losses, self.accuracy(points, labels))

    def accuracy(self, points, labels):
        probs = np.concatenate([self.forward(points[idx])
            for idx in util.misc.batch_iterator(range(len(points)), 8192)])
        hit = (probs > 0.5) == (labels > 0.5)
        return dict((name, float(hit[:,c].mean())) for c, name in enumerate(CHANNELS))

    # ---- checkpoint ----

    def to_dict(self):
        return {
            'config': self.config.to_dict(),
            'world_rect': list(self.world_rect),
            'layers': [{'weights': w, 'biases': b} for w, b in zip(self.weights, self.biases)],
            'train_state': {
                'step': self._t,
                'm': self._m,
                'v': self._v,
                'rng': self._rng.bit_generator.state,
                'order': self._order,
                'cursor': self._cursor,
                'stream_key': self._stream_key,
            },
        }

    @classmethod
    def from_dict(cls, d):
        field = cls(FieldConfig.from_dict(d['config']), d['world_rect'])
        layers = d['layers']
        if len(layers) != len(field.weights):
            raise InvalidConfig("checkpoint has {} layers, config implies {}".format(
                len(layers), len(field.weights)))
        for i, layer in enumerate(layers):
            w = np.array(layer['weights'], dtype=float)
            b = np.array(layer['biases'], dtype=float)
            if w.shape != field.weights[i].shape or b.shape != field.biases[i].shape:
                raise InvalidConfig("layer {} shape mismatch".format(i))
            field.weights[i][...] = w
            field.biases[i][...] = b
        st = d.get('train_state')
        if st:
            field._t = int(st['step'])
            for dst, src in zip(field._m + field._v, st['m'] + st['v']):
                dst[...] = np.array(src, dtype=float)
            field._rng.bit_generator.state = st['rng']
            field._order = np.array(st['order'], dtype=np.int64)
            field._cursor = int(st['cursor'])
            field._stream_key = st['stream_key']
        return field

    def to_rgb(self, resolution):
        ''' p_block in red and p_duck in blue over the world rectangle, +y up. '''
        nx = max(1, int(math.ceil((self.hi[0]-self.lo[0]) / resolution - 1e-9)))
        ny = max(1, int(math.ceil((self.hi[1]-self.lo[1]) / resolution - 1e-9)))
        ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing='ij')
        pts = self.lo + (np.stack([ix.ravel(), iy.ravel()], axis=1) + 0.5) * resolution
        probs = np.concatenate([self.forward(pts[idx])
            for idx in util.misc.batch_iterator(range(len(pts)), 8192)])
        rgb = np.zeros((nx*ny, 3), dtype=np.uint8)
        rgb[:,0] = np.round(probs[:,0] * 255)
        rgb[:,2] = np.round(probs[:,1] * 255)
        return rgb.reshape(nx, ny, 3).transpose(1, 0, 2)[::-1]

def read_field(inFile):
    return NeuralField.from_dict(util.file.read_json(inFile))

def write_field(field, outFile):
    util.file.write_json(field.to_dict(), outFile)


# =========================
# ***  operations  ***
# =========================

def field_init(config, world_rect):
    return NeuralField(config, world_rect)

def field_forward(field, p):
    ''' (p_block, p_duck) at one point, or an (n, 2) array for n points. '''
    p = np.asarray(p, dtype=float)
    probs = field.forward(p)
    if p.ndim == 1:
        return float(probs[0,0]), float(probs[0,1])
    return probs

def field_input_grad(field, p):
    ''' (dp_block/dp, dp_duck/dp) at one point, or (n, 2, 2) for n points. '''
    p = np.asarray(p, dtype=float)
    grad, _ = field.input_grad(p)
    if p.ndim == 1:
        return grad[0,0], grad[0,1]
    return grad

def field_train(field, tgrid, mode, steps):
    return field.train(tgrid, mode, steps)


# =========================
# ***  commands  ***
# =========================

def train_file(inTGrid, outField, mode=MODE_HAT, steps=2000, config=None, seed=None, stats=None):
    ''' Fit a new collision field to the labels of a traversability grid. '''
    tgrid = heightmap.read_tgrid(inTGrid)
    cfg = read_field_config(config)
    if seed is not None:
        cfg = FieldConfig(**dict(cfg.to_dict(), seed=seed))
    field = field_init(cfg, tgrid.world_rect())
    result = field_train(field, tgrid, mode, steps)
    log.info("trained %s field for %d steps: final loss %.5f, accuracy %s",
        mode, steps, result.losses[-1], result.accuracy)
    write_field(field, outField)
    if stats:
        util.file.write_json(result.to_dict(), stats)
    return 0
def parser_train(parser=argparse.ArgumentParser()):
    parser.add_argument('inTGrid', help='Input traversability grid (JSON).')
    parser.add_argument('outField', help='Output field checkpoint (JSON).')
    parser.add_argument('--mode', default=MODE_HAT, choices=MODES,
        help='Labelling mode. [default: %(default)s]')
    parser.add_argument('--steps', type=int, default=2000,
        help='Number of minibatch updates. [default: %(default)s]')
    parser.add_argument('--config', default=None,
        help='Field hyperparameters (JSON). [default: built-in defaults]')
    parser.add_argument('--stats', default=None,
        help='Also write the training losses and accuracies (JSON).')
    parser.add_argument('--seed', type=int, default=None,
        help='Random seed. [default: seed from --config]')
    util.cmd.common_args(parser, (('loglevel',None), ('version',None)))
    util.cmd.attach_main(parser, train_file, split_args=True)
    return parser
__commands__.append(('train', parser_train))

def eval_file(inField, outRaster, resolution=0.05):
    ''' Render a field's block and duck probabilities as a PPM image. '''
    field = read_field(inField)
    util.file.write_ppm(field.to_rgb(resolution), outRaster)
    return 0
def parser_eval(parser=argparse.ArgumentParser()):
    parser.add_argument('inField', help='Input field checkpoint (JSON).')
    parser.add_argument('outRaster', help='Output image (PPM).')
    parser.add_argument('--resolution', type=float, default=0.05,
        help='Pixel size in meters. [default: %(default)s]')
    util.cmd.common_args(parser, (('loglevel',None), ('version',None)))
    util.cmd.attach_main(parser, eval_file, split_args=True)
    return parser
__commands__.append(('eval', parser_eval))


def full_parser():
    return util.cmd.make_parser(__commands__, __doc__)
if __name__ == '__main__':
    util.cmd.main_argparse(__commands__, __doc__)
