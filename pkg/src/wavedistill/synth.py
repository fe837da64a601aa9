"""Synthetic data generation and the end-to-end recovery experiment.

Inputs are i.i.d. standard Gaussian signals; responses are a sparse
linear functional of their wavelet coefficients under a known groundtruth
bank, plus Gaussian noise. The recovery experiment trains the teacher on
these pairs (gated on held-out R^2), sweeps the distillation
hyperparameters from a chosen initialization, and reports the wavelet
distance of every swept cell to the groundtruth wavelet.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .distill import DistillConfig, sweep
from .errors import ExperimentPreconditionError, InvalidArgumentError
from .evalkit import cascade, wavelet_distance
from .filters import perturb, standard_bank
from .nnet import TrainConfig, forward_batch, init_teacher, r2_score, train
from .transform import dwt1d_batch

DESK_N_TRAIN = 5_000
DESK_N_TEST = 1_000

CASCADE_ITERATIONS = 8


@dataclass
class SynthSpec:
    n_train: int = 50_000
    n_test: int = 5_000
    dim: int = 64
    bank: str = "db5"
    beta_value: float = 2.0
    n_active: int = 3
    active_scale: int = 2
    levels: int = 3
    noise_sigma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.dim % (1 << self.levels) != 0:
            raise InvalidArgumentError(
                f"dim={self.dim} not divisible by 2^{self.levels}"
            )
        if not 1 <= self.active_scale <= self.levels:
            raise InvalidArgumentError("active_scale must be in 1..levels")
        band_len = self.dim >> self.active_scale
        if self.n_active > band_len:
            raise InvalidArgumentError(
                f"n_active={self.n_active} exceeds band length {band_len}"
            )

    @classmethod
    def desk_scale(cls, **kwargs):
        kwargs.setdefault("n_train", DESK_N_TRAIN)
        kwargs.setdefault("n_test", DESK_N_TEST)
        return cls(**kwargs)


@dataclass
class GroundTruth:
    bank: str
    levels: int
    active_scale: int
    band_indices: np.ndarray
    beta_value: float

    def clean_response(self, x):
        """Noise-free responses for a batch of signals."""
        pair = standard_bank(self.bank)
        _, details = dwt1d_batch(np.atleast_2d(x), pair, self.levels)
        band = details[self.active_scale - 1]
        return self.beta_value * band[:, self.band_indices].sum(axis=1)


@dataclass
class SynthData:
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    truth: GroundTruth


def generate(spec):
    """Draw the dataset: x ~ N(0, I), y = <coeffs(x), beta> + noise.

    The active coefficient locations are evenly spaced within the chosen
    detail band, rotated by a seed-derived offset. Fully deterministic
    per seed.
    """
    rng = np.random.default_rng(spec.seed)
    band_len = spec.dim >> spec.active_scale
    rotation = int(rng.integers(band_len))
    indices = np.sort(
        (rotation + (np.arange(spec.n_active) * band_len) // spec.n_active)
        % band_len
    )
    truth = GroundTruth(spec.bank, spec.levels, spec.active_scale,
                        indices, spec.beta_value)

    def draw(n):
        x = rng.normal(size=(n, spec.dim))
        y = truth.clean_response(x)
        y = y + spec.noise_sigma * rng.normal(size=n)
        return x, y

    x_train, y_train = draw(spec.n_train)
    x_test, y_test = draw(spec.n_test)
    return SynthData(x_train, y_train, x_test, y_test, truth)


TEACHER_HIDDEN = (32, 32)
TEACHER_GATE_R2 = 0.99


def train_teacher(data, seed=0, learning_rate=0.01, epochs=20,
                  batch_size=64):
    """Fit the dense teacher and report its held-out R^2."""
    model = init_teacher((data.x_train.shape[1], *TEACHER_HIDDEN, 1), seed)
    config = TrainConfig(learning_rate=learning_rate, epochs=epochs,
                         batch_size=batch_size, seed=seed)
    model, _ = train(model, (data.x_train, data.y_train), config)
    r2 = r2_score(data.y_test, forward_batch(model, data.x_test))
    return model, r2


def initial_filters(name, seed=0, noise_sigma=0.05):
    """Starting filters for the recovery experiment.

    ``db5_noise`` perturbs the groundtruth bank's taps with Gaussian noise
    of the given scale; any bank name is passed through unchanged.
    """
    if name == "db5_noise":
        return perturb(standard_bank("db5"), noise_sigma, seed)
    return standard_bank(name)


@dataclass
class RecoveryCell:
    lam: float
    gamma: float
    distance: float
    final_loss: float
    diverged: bool


@dataclass
class RecoveryReport:
    spec: SynthSpec
    init_name: str
    teacher_r2: float
    init_distance: float
    cells: list = field(default_factory=list)
    best: RecoveryCell = None

    def distance_table(self):
        """Rows (lam, log10 gamma, distance) for the distance-vs-gamma plot."""
        return [
            (c.lam, float(np.log10(c.gamma)) if c.gamma > 0 else float("-inf"),
             c.distance)
            for c in self.cells
        ]

    def write_distance_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("lam,log10_gamma,distance\n")
            for lam, log_gamma, distance in self.distance_table():
                fh.write(f"{lam!r},{log_gamma!r},{distance!r}\n")


def recovery_experiment(spec, init_name, lambda_grid, gamma_grid,
                        init_noise=0.05, distill_config=None):
    """Generate data, train the gated teacher, sweep, score every cell.

    Raises ExperimentPreconditionError when the teacher misses the R^2
    gate: distillation quality is meaningless under a bad teacher.
    """
    data = generate(spec)
    model, r2 = train_teacher(data, seed=spec.seed)
    if r2 <= TEACHER_GATE_R2:
        raise ExperimentPreconditionError(
            f"teacher R^2 {r2:.4f} failed the > {TEACHER_GATE_R2} gate"
        )

    init_pair = initial_filters(init_name, seed=spec.seed,
                                noise_sigma=init_noise)
    _, psi_truth = cascade(standard_bank(spec.bank), CASCADE_ITERATIONS)
    _, psi_init = cascade(init_pair, CASCADE_ITERATIONS)
    init_distance = wavelet_distance(psi_init, psi_truth)

    base = distill_config or DistillConfig(levels=spec.levels, seed=spec.seed)
    base = replace(base, levels=spec.levels, seed=spec.seed)
    records = sweep(data.x_train, model, lambda_grid, gamma_grid, base,
                    init_pair=init_pair)

    report = RecoveryReport(spec=spec, init_name=init_name, teacher_r2=r2,
                            init_distance=init_distance)
    for record in records:
        if record.diverged:
            dist = float("inf")
        else:
            _, psi = cascade(record.final_filters, CASCADE_ITERATIONS)
            dist = wavelet_distance(psi, psi_truth)
        report.cells.append(RecoveryCell(
            lam=record.config.lam, gamma=record.config.gamma, distance=dist,
            final_loss=record.final_loss, diverged=record.diverged))
    report.best = min(report.cells, key=lambda c: (c.distance, c.lam, c.gamma))
    return report, records


def log_grid(center, decades, count):
    """Log-spaced grid of ``count`` points spanning ``±decades`` around
    ``center``."""
    return center * np.logspace(-decades, decades, count)


def gaussian_bump_maps(n_maps, size, n_bumps, amp_mean, amp_sigma,
                       bump_width, noise_sigma, seed):
    """Noisy 2D maps carrying Gaussian bumps of class-dependent amplitude.

    The synthetic stand-in for real mass maps in the peak-counting
    pipeline: two calls with different ``amp_mean`` make two classes.
    """
    rng = np.random.default_rng(seed)
    rows, cols = np.mgrid[0:size, 0:size]
    maps = np.empty((n_maps, size, size))
    margin = 3
    for i in range(n_maps):
        image = rng.normal(0.0, noise_sigma, size=(size, size))
        centers = rng.uniform(margin, size - margin, size=(n_bumps, 2))
        amps = rng.normal(amp_mean, amp_sigma, size=n_bumps)
        for (cr, cc), amp in zip(centers, amps):
            image += amp * np.exp(
                -((rows - cr) ** 2 + (cols - cc) ** 2) / (2 * bump_width ** 2)
            )
        maps[i] = image
    return maps
