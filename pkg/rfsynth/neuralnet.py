from __future__ import unicode_literals

import base64
import collections
import hashlib
import json
import logging
import math
import time

import numpy as np

import rfsynth


__all__ = [
    'AdamState',
    'Dataset',
    'DenseLayer',
    'FEATURES',
    'HIDDEN_WIDTHS',
    'MLPModel',
    'Metrics',
    'NormStats',
    'PlateauScheduler',
    'TrainConfig',
    'TrainEvent',
    'TrainReport',
    'adam_step',
    'architecture_hash',
    'backward',
    'evaluate',
    'forward',
    'input_gradient',
    'layer_norm',
    'load_checkpoint',
    'metrics',
    'mse_loss',
    'predict',
    'predict_and_gradient',
    'reduce_lr_on_plateau',
    'save_checkpoint',
    'softplus',
    'train',
]

logger = logging.getLogger(__name__)


FEATURES = ('f', 'W', 'L', 'Lv', 'Lh', 'Lcn')
"""Input features of the Q-factor model, in column order."""

HIDDEN_WIDTHS = (256, 256, 256, 128, 128, 128, 64, 64, 64, 32)
"""Hidden layer widths of the full-size Q-factor model."""

CHECKPOINT_VERSION = 1

LN_EPS = 1e-5


class TrainEvent(object):

    """Training events, emitted by :func:`train` on its ``emitter``."""

    EPOCH_FINISHED = 'epoch_finished'
    """Called after every epoch.

    :param epoch: the 1-based epoch number
    :param train_loss: the mean training MSE of the epoch
    :param val_loss: the validation MSE after the epoch
    :param lr: the learning rate for the next epoch
    """


def layer_norm(x, gamma, beta, eps=LN_EPS):
    """Normalize ``x`` over its last axis, then scale by ``gamma`` and shift
    by ``beta``."""
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return gamma * (x - mean) / np.sqrt(var + eps) + beta


def softplus(z):
    """``log(1 + exp(z))``, stable for large ``|z|``."""
    z = np.asarray(z, dtype=np.float64)
    result = np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))
    return float(result) if result.ndim == 0 else result


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class NormStats(collections.namedtuple('NormStats', ['mu', 'sigma'])):

    """Per-feature means and standard deviations of the training split."""

    __slots__ = ()

    @classmethod
    def from_data(cls, features):
        features = np.asarray(features, dtype=np.float64)
        mu = features.mean(axis=0)
        sigma = features.std(axis=0)
        sigma[sigma <= 0] = 1.0
        return cls(mu, sigma)

    def normalize(self, x):
        return (np.asarray(x, dtype=np.float64) - self.mu) / self.sigma

    def denormalize(self, x):
        return np.asarray(x, dtype=np.float64) * self.sigma + self.mu


class DenseLayer(object):

    """A dense layer. Hidden layers carry LayerNorm ``gamma`` and ``beta``,
    the output head does not."""

    def __init__(self, weights, biases, gamma=None, beta=None):
        self.weights = weights
        self.biases = biases
        self.gamma = gamma
        self.beta = beta

    @property
    def params(self):
        if self.gamma is None:
            return [self.weights, self.biases]
        return [self.weights, self.biases, self.gamma, self.beta]

    @property
    def hidden(self):
        return self.gamma is not None


def architecture_hash(input_width, widths):
    """SHA-1 of the model architecture, stored in checkpoints."""
    text = '%d:%s:1' % (input_width, ','.join('%d' % w for w in widths))
    return hashlib.sha1(text.encode('ascii')).hexdigest()


class MLPModel(object):

    """The Q-factor regression network.

    Every hidden layer is Linear, then ReLU, then LayerNorm. The head is a
    Linear layer to one output followed by Softplus, so predictions are
    never negative. Weights are drawn Kaiming-uniform from a generator
    seeded with ``seed``; ``init='zeros'`` creates an all-zero network.
    """

    def __init__(self, widths=HIDDEN_WIDTHS, input_width=6, seed=0, init=None):
        assert init in (None, 'zeros'), 'Unknown init %r' % init
        self.widths = tuple(int(w) for w in widths)
        self.input_width = input_width
        rng = np.random.default_rng(seed)
        self.layers = []
        fan_in = input_width
        for width in self.widths + (1,):
            if init == 'zeros':
                weights = np.zeros((fan_in, width))
            else:
                bound = math.sqrt(6.0 / fan_in)
                weights = rng.uniform(-bound, bound, (fan_in, width))
            biases = np.zeros(width)
            if len(self.layers) == len(self.widths):
                self.layers.append(DenseLayer(weights, biases))
            else:
                self.layers.append(
                    DenseLayer(
                        weights, biases, np.ones(width), np.zeros(width)
                    )
                )
            fan_in = width

    def __repr__(self):
        return 'MLPModel(widths=%r)' % (self.widths,)

    @property
    def params(self):
        """Flat list of the parameter arrays, updated in place by
        :func:`adam_step`."""
        return [p for layer in self.layers for p in layer.params]

    @property
    def num_params(self):
        return sum(p.size for p in self.params)

    @property
    def architecture(self):
        return architecture_hash(self.input_width, self.widths)

    def copy(self):
        other = MLPModel.__new__(MLPModel)
        other.widths = self.widths
        other.input_width = self.input_width
        other.layers = [
            DenseLayer(*[p.copy() for p in layer.params])
            for layer in self.layers
        ]
        return other

    def load_params(self, params):
        for target, source in zip(self.params, params):
            target[...] = source


def _check_features(model, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (model.input_width,):
        raise rfsynth.ShapeError(
            'Expected %d input features, got shape %r'
            % (model.input_width, x.shape)
        )
    return x


def _forward(model, xn):
    """Forward pass on normalized input, keeping what backprop needs."""
    cache = []
    a = xn
    for layer in model.layers:
        z = a @ layer.weights + layer.biases
        if layer.hidden:
            r = np.maximum(z, 0.0)
            mean = r.mean(axis=1, keepdims=True)
            std = np.sqrt(r.var(axis=1, keepdims=True) + LN_EPS)
            xhat = (r - mean) / std
            cache.append((a, z, xhat, std))
            a = layer.gamma * xhat + layer.beta
        else:
            cache.append((a, z, None, None))
            a = softplus(z)
    return a[:, 0], cache


def _backprop(model, cache, upstream, want_params=True):
    """Push ``upstream`` (dL/dQ per sample) back through the network.

    Returns the parameter gradients (or :class:`None`) and dL/dx on the
    normalized input.
    """
    grads = []
    grad = upstream[:, None]
    for layer, (a, z, xhat, std) in zip(
        reversed(model.layers), reversed(cache)
    ):
        if layer.hidden:
            if want_params:
                dgamma = (grad * xhat).sum(axis=0)
                dbeta = grad.sum(axis=0)
            dxhat = grad * layer.gamma
            dr = (
                dxhat
                - dxhat.mean(axis=1, keepdims=True)
                - xhat * (dxhat * xhat).mean(axis=1, keepdims=True)
            ) / std
            dz = dr * (z > 0)
        else:
            dz = grad * _sigmoid(z)
        if want_params:
            layer_grads = [a.T @ dz, dz.sum(axis=0)]
            if layer.hidden:
                layer_grads += [dgamma, dbeta]
            grads[:0] = layer_grads
        grad = dz @ layer.weights.T
    return (grads if want_params else None), grad


def predict(model, stats, features):
    """Predicted Q for every row of ``features`` (raw units)."""
    features = _check_features(model, features)
    q, _ = _forward(model, stats.normalize(np.atleast_2d(features)))
    return q


def forward(model, stats, x_raw):
    """Predicted Q for one raw 6-feature input."""
    x_raw = _check_features(model, x_raw)
    if x_raw.ndim != 1:
        raise rfsynth.ShapeError('forward takes a single sample')
    return float(predict(model, stats, x_raw)[0])


def mse_loss(pred, target):
    """Mean squared error."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise rfsynth.LengthMismatch(
            'pred has %d values, target %d' % (pred.size, target.size)
        )
    if not pred.size:
        raise rfsynth.LengthMismatch('mse_loss needs at least one value')
    return float(np.mean((pred - target) ** 2))


def backward(model, stats, features, targets):
    """Exact gradients for a batch.

    Returns ``(param_grads, input_grads)``: the gradients of the batch MSE
    with respect to :attr:`MLPModel.params`, and the gradient of each
    sample's predicted Q with respect to its raw input features.
    """
    features = np.atleast_2d(_check_features(model, features))
    targets = np.asarray(targets, dtype=np.float64)
    q, cache = _forward(model, stats.normalize(features))
    grads, _ = _backprop(model, cache, 2.0 * (q - targets) / len(q))
    _, dxn = _backprop(model, cache, np.ones_like(q), want_params=False)
    return grads, dxn / stats.sigma


def input_gradient(model, stats, features):
    """dQ/dx for each raw input row."""
    return predict_and_gradient(model, stats, features)[1]


def predict_and_gradient(model, stats, features):
    """Predicted Q and dQ/dx for each raw input row, from one forward
    pass."""
    features = np.atleast_2d(_check_features(model, features))
    q, cache = _forward(model, stats.normalize(features))
    _, dxn = _backprop(model, cache, np.ones_like(q), want_params=False)
    return q, dxn / stats.sigma


class AdamState(object):

    """Moment estimates and step counter of an Adam optimizer."""

    def __init__(self, params, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        assert lr > 0, 'lr must be positive'
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps


def adam_step(params, grads, state):
    """One Adam update with bias correction, applied to ``params`` in
    place. Returns ``(params, state)``."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1 - b1 ** state.t
    c2 = 1 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


class PlateauScheduler(object):

    """Lowers the learning rate when the validation loss stops improving.

    A loss counts as an improvement when it is below the best loss so far
    by more than ``threshold`` relative. After ``patience`` epochs without
    improvement the rate is multiplied by ``factor``.
    """

    def __init__(self, lr, factor=0.5, patience=10, threshold=1e-4):
        assert 0 < factor < 1, 'factor must be in (0, 1)'
        self.lr = lr
        self.factor = factor
        self.patience = patience
        self.threshold = threshold
        self.best = math.inf
        self.num_bad_epochs = 0

    def step(self, loss):
        if loss < self.best * (1 - self.threshold):
            self.best = loss
            self.num_bad_epochs = 0
        else:
            self.num_bad_epochs += 1
        if self.num_bad_epochs >= self.patience:
            self.lr *= self.factor
            self.num_bad_epochs = 0
            logger.info('Plateau: learning rate lowered to %g', self.lr)
        return self.lr


def reduce_lr_on_plateau(history, state):
    """Feed the latest validation loss in ``history`` to the
    :class:`PlateauScheduler` ``state`` and return the new rate."""
    assert history, 'reduce_lr_on_plateau needs a completed epoch'
    return state.step(history[-1])


class TrainConfig(
    collections.namedtuple(
        'TrainConfig',
        [
            'batch_size',
            'max_epochs',
            'initial_lr',
            'plateau_factor',
            'plateau_patience',
            'plateau_threshold',
            'early_stop_patience',
            'seed',
            'widths',
        ],
    )
):

    """Training hyperparameters."""

    __slots__ = ()

    def __new__(
        cls,
        batch_size=16384,
        max_epochs=300,
        initial_lr=0.001,
        plateau_factor=0.5,
        plateau_patience=10,
        plateau_threshold=1e-4,
        early_stop_patience=25,
        seed=0,
        widths=HIDDEN_WIDTHS,
    ):
        assert batch_size >= 1, 'batch_size must be >= 1'
        assert 0 < plateau_factor < 1, 'plateau_factor must be in (0, 1)'
        return super(TrainConfig, cls).__new__(
            cls,
            batch_size,
            max_epochs,
            initial_lr,
            plateau_factor,
            plateau_patience,
            plateau_threshold,
            early_stop_patience,
            seed,
            tuple(widths),
        )


class Dataset(object):

    """Inductor samples with a seeded 80:10:10 train/validation/test split.

    ``features`` is an ``N x 6`` array of ``f, W, L, Lv, Lh, Lcn`` and
    ``targets`` the unnormalized Q values.
    """

    HEADER = ','.join(FEATURES + ('Q',))

    def __init__(self, features, targets, train, val, test):
        self.features = features
        self.targets = targets
        self.train_idx = train
        self.val_idx = val
        self.test_idx = test

    def __len__(self):
        return len(self.targets)

    @classmethod
    def from_arrays(cls, features, targets, seed=0, split=(0.8, 0.1)):
        """Clean the rows and split them.

        Rows with non-finite entries, non-positive features or negative Q
        are dropped. The train and validation sizes are ``floor`` of their
        fractions; the test split takes the rest.
        """
        features = np.asarray(features, dtype=np.float64).reshape(-1, 6)
        targets = np.asarray(targets, dtype=np.float64).reshape(-1)
        if len(features) != len(targets):
            raise rfsynth.LengthMismatch(
                '%d feature rows but %d targets'
                % (len(features), len(targets))
            )
        keep = (
            np.isfinite(features).all(axis=1)
            & (features > 0).all(axis=1)
            & np.isfinite(targets)
            & (targets >= 0)
        )
        dropped = int((~keep).sum())
        if dropped:
            logger.info('Dropped %d non-physical rows', dropped)
        features, targets = features[keep], targets[keep]
        n = len(targets)
        order = np.random.default_rng(seed).permutation(n)
        n_train = int(math.floor(split[0] * n))
        n_val = int(math.floor(split[1] * n))
        return cls(
            features,
            targets,
            np.sort(order[:n_train]),
            np.sort(order[n_train : n_train + n_val]),
            np.sort(order[n_train + n_val :]),
        )

    @classmethod
    def load_csv(cls, filename, seed=0):
        """Load a CSV file with the header ``f,W,L,Lv,Lh,Lcn,Q``."""
        with open(filename, encoding='utf-8') as fh:
            header = fh.readline().strip().replace(' ', '')
            if header != cls.HEADER:
                raise rfsynth.ShapeError(
                    '%s: expected header %s, got %s'
                    % (filename, cls.HEADER, header)
                )
            data = np.loadtxt(fh, delimiter=',', ndmin=2)
        if not data.size:
            data = np.zeros((0, 7))
        return cls.from_arrays(data[:, :6], data[:, 6], seed=seed)

    def save_csv(self, filename):
        data = np.column_stack([self.features, self.targets])
        np.savetxt(
            filename,
            data,
            delimiter=',',
            header=self.HEADER,
            comments='',
            fmt='%.17g',
        )

    def _part(self, idx):
        return self.features[idx], self.targets[idx]

    @property
    def train(self):
        return self._part(self.train_idx)

    @property
    def val(self):
        return self._part(self.val_idx)

    @property
    def test(self):
        return self._part(self.test_idx)


class TrainReport(object):

    """Loss curves and outcome of a :func:`train` run."""

    def __init__(self):
        self.train_loss = []
        self.val_loss = []
        self.lr = []
        self.best_epoch = None
        self.best_val = None
        self.stopped_early = False
        self.seconds = 0.0

    def __repr__(self):
        return 'TrainReport(epochs=%d, best_epoch=%r, best_val=%r)' % (
            len(self.val_loss),
            self.best_epoch,
            self.best_val,
        )

    @property
    def epochs(self):
        return len(self.val_loss)

    @property
    def final_lr(self):
        return self.lr[-1] if self.lr else None

    def to_dict(self):
        return collections.OrderedDict(
            [
                ('epochs', self.epochs),
                ('best_epoch', self.best_epoch),
                ('best_val', self.best_val),
                ('stopped_early', self.stopped_early),
                ('final_lr', self.final_lr),
                ('train_loss', list(self.train_loss)),
                ('val_loss', list(self.val_loss)),
                ('lr', list(self.lr)),
            ]
        )


def train(dataset, config=None, emitter=None):
    """Train a model on ``dataset`` and return ``(model, stats, report)``.

    The returned model holds the parameters of the epoch with the lowest
    validation MSE. Training stops after ``config.max_epochs`` epochs or
    after ``config.early_stop_patience`` epochs without a new best.

    Raises :exc:`EmptySplit` if the train split, or the validation split
    when training is requested, is empty.
    """
    config = config or TrainConfig()
    x_train, y_train = dataset.train
    x_val, y_val = dataset.val
    if not len(y_train):
        raise rfsynth.EmptySplit('The training split is empty')
    if config.max_epochs > 0 and not len(y_val):
        raise rfsynth.EmptySplit('The validation split is empty')

    stats = NormStats.from_data(x_train)
    model = MLPModel(config.widths, seed=config.seed)
    report = TrainReport()
    if config.max_epochs == 0:
        return model, stats, report

    started = time.time()
    xn_train = stats.normalize(x_train)
    adam = AdamState(model.params, lr=config.initial_lr)
    scheduler = PlateauScheduler(
        config.initial_lr,
        factor=config.plateau_factor,
        patience=config.plateau_patience,
        threshold=config.plateau_threshold,
    )
    rng = np.random.default_rng(config.seed)
    best_params = None
    bad_epochs = 0

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(y_train))
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            q, cache = _forward(model, xn_train[batch])
            residual = q - y_train[batch]
            total += float(np.sum(residual ** 2))
            grads, _ = _backprop(model, cache, 2.0 * residual / len(batch))
            adam_step(model.params, grads, adam)
        train_loss = total / len(order)
        val_loss = mse_loss(predict(model, stats, x_val), y_val)

        report.train_loss.append(train_loss)
        report.val_loss.append(val_loss)
        if report.best_val is None or val_loss < report.best_val:
            report.best_val = val_loss
            report.best_epoch = epoch
            best_params = [p.copy() for p in model.params]
            bad_epochs = 0
        else:
            bad_epochs += 1

        adam.lr = reduce_lr_on_plateau(report.val_loss, scheduler)
        report.lr.append(adam.lr)
        logger.debug(
            'Epoch %d: train %.6g, val %.6g, lr %g',
            epoch,
            train_loss,
            val_loss,
            adam.lr,
        )
        if emitter is not None:
            emitter.emit(
                TrainEvent.EPOCH_FINISHED, epoch, train_loss, val_loss, adam.lr
            )
        if bad_epochs >= config.early_stop_patience:
            report.stopped_early = True
            logger.info('Early stop after epoch %d', epoch)
            break

    model.load_params(best_params)
    report.seconds = time.time() - started
    logger.info(
        'Trained %d epochs; best validation MSE %.6g at epoch %d',
        report.epochs,
        report.best_val,
        report.best_epoch,
    )
    return model, stats, report


Metrics = collections.namedtuple(
    'Metrics', ['mae', 'mse', 'rmse', 'r2', 'mape']
)
"""Regression metrics. ``mape`` is in percent."""


def evaluate(model, stats, testset):
    """Compute :class:`Metrics` on a ``(features, targets)`` test set.

    MAPE skips targets with ``|Q| < 1e-9`` and is 0 when none remain. R² is
    1 for a perfect fit of constant targets and 0 for any other fit of
    constant targets.
    """
    features, targets = testset
    targets = np.asarray(targets, dtype=np.float64)
    if not len(targets):
        raise rfsynth.EmptyTestSet('Cannot evaluate on an empty test set')
    pred = predict(model, stats, features)
    return metrics(pred, targets)


def metrics(pred, targets):
    """:class:`Metrics` of predictions ``pred`` against ``targets``."""
    pred = np.asarray(pred, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    error = pred - targets
    mse = float(np.mean(error ** 2))
    sse = float(np.sum(error ** 2))
    sst = float(np.sum((targets - targets.mean()) ** 2))
    if sst > 0:
        r2 = 1.0 - sse / sst
    else:
        r2 = 1.0 if sse == 0 else 0.0
    mask = np.abs(targets) >= 1e-9
    if mask.any():
        relative = np.abs(error[mask]) / np.abs(targets[mask])
        mape = float(np.mean(relative)) * 100
    else:
        mape = 0.0
    return Metrics(
        float(np.mean(np.abs(error))), mse, math.sqrt(mse), r2, mape
    )


def _encode_array(array):
    data = np.ascontiguousarray(array, dtype='<f8').tobytes()
    return base64.b64encode(data).decode('ascii')


def _decode_array(text, shape):
    try:
        data = base64.b64decode(text.encode('ascii'), validate=True)
        array = np.frombuffer(data, dtype='<f8').astype(np.float64)
        return array.reshape(shape)
    except (ValueError, TypeError) as exc:
        raise rfsynth.CheckpointError('Bad parameter block: %s' % exc)


def save_checkpoint(filename, model, stats, metadata=None):
    """Write ``model`` and ``stats`` to a JSON checkpoint file."""
    doc = collections.OrderedDict(
        [
            ('format', 'rfsynth-mlp'),
            ('version', CHECKPOINT_VERSION),
            ('input_width', model.input_width),
            ('widths', list(model.widths)),
            ('architecture', model.architecture),
            (
                'params',
                [
                    {'shape': list(p.shape), 'data': _encode_array(p)}
                    for p in model.params
                ],
            ),
            ('mu', _encode_array(stats.mu)),
            ('sigma', _encode_array(stats.sigma)),
            ('metadata', metadata or {}),
        ]
    )
    with open(filename, 'w', encoding='utf-8') as fh:
        json.dump(doc, fh, indent=1)
    logger.info('Saved checkpoint %s', filename)


def load_checkpoint(filename, widths=None):
    """Read a checkpoint written by :func:`save_checkpoint`.

    Returns ``(model, stats)``. Raises :exc:`CheckpointError` if the file is
    malformed, has another version, or does not match ``widths`` when
    given.
    """
    try:
        with open(filename, encoding='utf-8') as fh:
            doc = json.load(fh)
    except ValueError as exc:
        raise rfsynth.CheckpointError('%s: not JSON: %s' % (filename, exc))
    try:
        if doc['format'] != 'rfsynth-mlp':
            raise rfsynth.CheckpointError('%s: unknown format' % filename)
        if doc['version'] != CHECKPOINT_VERSION:
            raise rfsynth.CheckpointError(
                '%s: unsupported version %r' % (filename, doc['version'])
            )
        stored = tuple(doc['widths'])
        input_width = doc['input_width']
        if doc['architecture'] != architecture_hash(input_width, stored):
            raise rfsynth.CheckpointError(
                '%s: architecture hash mismatch' % filename
            )
        if widths is not None and tuple(widths) != stored:
            raise rfsynth.CheckpointError(
                '%s: checkpoint widths %r, expected %r'
                % (filename, stored, tuple(widths))
            )
        model = MLPModel(stored, input_width=input_width, init='zeros')
        blocks = doc['params']
        if len(blocks) != len(model.params):
            raise rfsynth.CheckpointError(
                '%s: expected %d parameter blocks, got %d'
                % (filename, len(model.params), len(blocks))
            )
        params = []
        for target, block in zip(model.params, blocks):
            if tuple(block['shape']) != target.shape:
                raise rfsynth.CheckpointError(
                    '%s: parameter shape %r, expected %r'
                    % (filename, block['shape'], target.shape)
                )
            params.append(_decode_array(block['data'], target.shape))
        model.load_params(params)
        stats = NormStats(
            _decode_array(doc['mu'], (input_width,)),
            _decode_array(doc['sigma'], (input_width,)),
        )
    except (KeyError, TypeError) as exc:
        raise rfsynth.CheckpointError('%s: missing field %s' % (filename, exc))
    logger.info('Loaded checkpoint %s', filename)
    return model, stats
