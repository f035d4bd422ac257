"""Alternating critic/generator training, convergence detection, transfer fine-tuning."""

from __future__ import annotations

import copy
import csv
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from .errors import IncompatibleCheckpointError, InvalidArgumentError, InvalidSpecError, NumericalError
from .gancore import (
    Checkpoint,
    Critic,
    Generator,
    ModelSpec,
    build_model,
    gradient_penalty,
    save_checkpoint,
    to_nchw,
    to_nhwc,
    vanilla_losses,
    wasserstein_losses,
)
from .pointgen import AffineTransform, PointDataset
from .rng import make_rng, torch_generator
from .scenegen import ImageDataset

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ("step", "role", "loss", "accuracy", "wall_ms")


@dataclass
class TrainSpec:
    optimizer: str = "adam"
    learning_rate: float = 2e-4
    critic_steps_per_gen: int = 1
    max_steps: int = 150_000
    batch_size: int = 64
    seed: int = 0
    convergence_window: int = 2000
    convergence_band: float = 0.05
    convergence_every: int = 500
    early_stop: bool = True
    checkpoint_every: int = 5000
    sample_every: int = 5000
    adam_betas: tuple[float, float] = (0.5, 0.999)
    rmsprop_alpha: float = 0.9
    rmsprop_eps: float = 1e-8
    deterministic: bool = False

    def __post_init__(self):
        self.adam_betas = tuple(self.adam_betas)
        if self.optimizer not in ("adam", "rmsprop"):
            raise InvalidSpecError(f"unknown optimizer {self.optimizer!r}")
        if self.critic_steps_per_gen < 1 or self.batch_size < 1 or self.max_steps < 0:
            raise InvalidSpecError("critic_steps_per_gen and batch_size must be >= 1, max_steps >= 0")

    @classmethod
    def for_family(cls, family: str, **overrides) -> "TrainSpec":
        """Protocol defaults: RMSProp @ 5e-5 with 5 critic steps for Wasserstein
        families, Adam @ 2e-4 with 1 step otherwise."""
        if family in ("mlp_wgan_gp", "conv_wgan_gp"):
            base = dict(optimizer="rmsprop", learning_rate=5e-5, critic_steps_per_gen=5)
        else:
            base = dict(optimizer="adam", learning_rate=2e-4, critic_steps_per_gen=1)
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["adam_betas"] = list(self.adam_betas)
        return d


@dataclass
class TrainHistory:
    step: list[int] = field(default_factory=list)
    role: list[str] = field(default_factory=list)
    loss: list[float] = field(default_factory=list)
    accuracy: list[float | None] = field(default_factory=list)
    wall_ms: list[float] = field(default_factory=list)
    tags: dict = field(default_factory=dict)
    stop_reason: str = ""

    def append(self, step, role, loss, accuracy, wall_ms):
        self.step.append(int(step))
        self.role.append(role)
        self.loss.append(float(loss))
        self.accuracy.append(None if accuracy is None else float(accuracy))
        self.wall_ms.append(float(wall_ms))

    def __len__(self):
        return len(self.step)

    def count(self, role: str) -> int:
        return sum(1 for r in self.role if r == role)

    def losses(self, role: str) -> np.ndarray:
        return np.array([l for l, r in zip(self.loss, self.role) if r == role], dtype=np.float64)

    def accuracies(self) -> np.ndarray:
        return np.array(
            [a for a, r in zip(self.accuracy, self.role) if r == "critic" and a is not None], dtype=np.float64
        )

    @property
    def generator_steps(self) -> int:
        return self.count("generator")

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(HISTORY_COLUMNS)
            for row in zip(self.step, self.role, self.loss, self.accuracy, self.wall_ms):
                s, r, l, a, t = row
                w.writerow([s, r, repr(l), "" if a is None else repr(a), f"{t:.3f}"])

    @classmethod
    def from_csv(cls, path: str | Path) -> "TrainHistory":
        h = cls()
        with open(path, newline="") as f:
            for row in csv.DictReader(f):
                acc = row["accuracy"]
                h.append(int(row["step"]), row["role"], float(row["loss"]), float(acc) if acc else None,
                         float(row["wall_ms"]))
        return h


@dataclass
class TrainResult:
    generator: Generator
    critic: Critic
    history: TrainHistory
    spec: ModelSpec
    train_spec: TrainSpec
    step: int
    optimizer_state: dict


class DirectorySink:
    """Writes checkpoints and sample snapshots under a run directory."""

    def __init__(self, run_dir: str | Path, transform: AffineTransform | None = None,
                 snapshot_n: int = 64, snapshot_seed: int = 0, extra: dict | None = None):
        self.run_dir = Path(run_dir)
        self.transform = transform
        self.snapshot_n = snapshot_n
        self.snapshot_seed = snapshot_seed
        self.extra = extra or {}
        self.last_checkpoint: str | None = None
        self.checkpoints: list[str] = []

    def on_checkpoint(self, step, spec, generator, critic, optimizer_state, final=False):
        path = self.run_dir / "checkpoints" / f"step_{step:07d}.pt"
        save_checkpoint(path, spec, generator, critic, step, optimizer_state, self.extra)
        self.last_checkpoint = str(path)
        if str(path) not in self.checkpoints:
            self.checkpoints.append(str(path))
        return str(path)

    def on_samples(self, step, generator):
        out = self.run_dir / "samples"
        out.mkdir(parents=True, exist_ok=True)
        batch = snapshot_samples(generator, self.snapshot_n, self.snapshot_seed, self.transform)
        np.save(out / f"step_{step:07d}.npy", batch)


def _as_array(data) -> np.ndarray:
    if isinstance(data, PointDataset):
        return np.asarray(data.points, dtype=np.float32)
    if isinstance(data, ImageDataset):
        return np.asarray(data.images, dtype=np.float32)
    return np.asarray(data, dtype=np.float32)


def _batches(data: torch.Tensor, batch_size: int, rng: np.random.Generator):
    n = data.shape[0]
    while True:
        perm = rng.permutation(n)
        for i in range(0, n - batch_size + 1, batch_size):
            yield data[perm[i:i + batch_size]]


def _optimizer(ts: TrainSpec, params):
    if ts.optimizer == "adam":
        return torch.optim.Adam(params, lr=ts.learning_rate, betas=ts.adam_betas)
    return torch.optim.RMSprop(params, lr=ts.learning_rate, alpha=ts.rmsprop_alpha, eps=ts.rmsprop_eps)


def _nets_for(spec, ts, init, resume):
    if init is None:
        g, c = build_model(spec, init_seed=ts.seed)
    else:
        g, c = init.build()
    opt_g = _optimizer(ts, g.parameters())
    opt_c = _optimizer(ts, c.parameters())
    start = 0
    if init is not None and resume:
        if init.optimizer_state:
            # load_state_dict may alias the stored tensors; keep the checkpoint intact
            state = copy.deepcopy(init.optimizer_state)
            opt_g.load_state_dict(state["generator"])
            opt_c.load_state_dict(state["critic"])
        start = init.step
    return g, c, opt_g, opt_c, start


def train(
    spec: ModelSpec,
    ts: TrainSpec,
    data,
    sinks=(),
    init: Checkpoint | None = None,
    resume: bool = False,
    tags: dict | None = None,
) -> TrainResult:
    """Run the alternating update loop.

    ``data`` must already lie in the generator's output range.  ``max_steps``
    counts generator updates and is a total budget, so a resumed run stops at
    the same step a fresh one would.  ``init`` seeds the weights; with
    ``resume`` the optimizer state and step counter are restored too.
    """
    arr = _as_array(data)
    if arr.shape[0] == 0:
        raise InvalidArgumentError("cannot train on an empty dataset")
    if tuple(arr.shape[1:]) != spec.data_shape:
        raise InvalidSpecError(f"data shape {arr.shape[1:]} does not match model data shape {spec.data_shape}")
    if ts.batch_size > arr.shape[0]:
        raise InvalidArgumentError(f"batch size {ts.batch_size} exceeds dataset size {arr.shape[0]}")
    if not np.all(np.isfinite(arr)) or np.abs(arr).max() > 1.0:
        raise InvalidArgumentError("training data must be finite and inside [-1, 1]")
    tensor = to_nchw(arr) if arr.ndim == 4 else torch.from_numpy(np.ascontiguousarray(arr))

    g, c, opt_g, opt_c, start = _nets_for(spec, ts, init, resume)
    history = TrainHistory(tags=dict(tags or {}))
    sinks = list(sinks)

    def opt_state():
        return {"generator": opt_g.state_dict(), "critic": opt_c.state_dict()}

    def last_checkpoint():
        paths = [getattr(s, "last_checkpoint", None) for s in sinks]
        paths = [p for p in paths if p]
        return paths[-1] if paths else None

    step = start
    history.stop_reason = "max_steps"
    if start < ts.max_steps:
        prev_det = torch.are_deterministic_algorithms_enabled()
        if ts.deterministic:
            torch.use_deterministic_algorithms(True)
        try:
            with torch.random.fork_rng(devices=[]):
                # dropout draws from the global generator
                torch.manual_seed(int(make_rng(ts.seed, "dropout", start).integers(0, 2**63 - 1)))
                step = _loop(spec, ts, g, c, opt_g, opt_c, tensor, start, history, sinks, opt_state,
                             last_checkpoint)
        finally:
            torch.use_deterministic_algorithms(prev_det)

    for s in sinks:
        s.on_checkpoint(step, spec, g, c, opt_state(), final=True)
        s.on_samples(step, g)
    return TrainResult(g, c, history, spec, ts, step, opt_state())


def _loop(spec, ts, g, c, opt_g, opt_c, tensor, start, history, sinks, opt_state, last_checkpoint):
    batches = _batches(tensor, ts.batch_size, make_rng(ts.seed, "batches", start))
    zgen = torch_generator(ts.seed, "latent", start)
    gpgen = torch_generator(ts.seed, "gp", start)
    wasserstein = spec.is_wasserstein
    t0 = time.perf_counter()
    g.train()
    c.train()
    step = start
    d_real = None

    def check(value, role):
        if not math.isfinite(value):
            raise NumericalError(f"non-finite {role} loss at step {step}", last_checkpoint())

    for step in range(start + 1, ts.max_steps + 1):
        for _ in range(ts.critic_steps_per_gen):
            real = next(batches)
            z = torch.randn(ts.batch_size, spec.latent_dim, generator=zgen)
            with torch.no_grad():
                fake = g(z)
            d_real = c(real)
            d_fake = c(fake)
            if wasserstein:
                c_loss, _ = wasserstein_losses(d_real, d_fake)
                loss = c_loss + gradient_penalty(c, real, fake, spec.gp_lambda, generator=gpgen)
                acc = None
            else:
                loss, _ = vanilla_losses(d_real, d_fake)
                acc = 0.5 * ((d_real > 0.5).float().mean() + (d_fake < 0.5).float().mean()).item()
            opt_c.zero_grad(set_to_none=True)
            loss.backward()
            opt_c.step()
            check(loss.item(), "critic")
            history.append(step, "critic", loss.item(), acc, 1000 * (time.perf_counter() - t0))

        z = torch.randn(ts.batch_size, spec.latent_dim, generator=zgen)
        d_fake = c(g(z))
        if wasserstein:
            _, g_loss = wasserstein_losses(d_real.detach(), d_fake)
        else:
            _, g_loss = vanilla_losses(d_real.detach(), d_fake)
        opt_g.zero_grad(set_to_none=True)
        g_loss.backward()
        opt_g.step()
        check(g_loss.item(), "generator")
        history.append(step, "generator", g_loss.item(), None, 1000 * (time.perf_counter() - t0))

        if ts.checkpoint_every and step % ts.checkpoint_every == 0 and step < ts.max_steps:
            for s in sinks:
                s.on_checkpoint(step, spec, g, c, opt_state())
        if ts.sample_every and step % ts.sample_every == 0 and step < ts.max_steps:
            for s in sinks:
                s.on_samples(step, g)
        if (ts.early_stop and ts.convergence_every and step % ts.convergence_every == 0
                and convergence_check(history, ts.convergence_window, ts.convergence_band, wasserstein)):
            history.stop_reason = "converged"
            break
    return step


def convergence_check(h: TrainHistory, window: int = 2000, band: float = 0.05,
                      wasserstein: bool | None = None) -> bool:
    """Trailing-window convergence test over critic records.

    GAN families: mean discriminator accuracy within ``0.5 +- band`` and every
    value within ``0.5 +- 2*band``.  Wasserstein families: the mean of
    ``|loss|`` over the last window differs from the window before it by less
    than ``band`` relative.  Too little history counts as not converged.
    """
    if wasserstein is None:
        wasserstein = h.count("critic") > 0 and len(h.accuracies()) == 0
    if window < 1:
        return False
    if not wasserstein:
        acc = h.accuracies()
        if len(acc) < window:
            return False
        tail = acc[-window:]
        return bool(abs(tail.mean() - 0.5) <= band and np.max(np.abs(tail - 0.5)) <= 2 * band)
    losses = np.abs(h.losses("critic"))
    if len(losses) < 2 * window:
        return False
    prev = losses[-2 * window:-window].mean()
    cur = losses[-window:].mean()
    return bool(abs(cur - prev) / max(prev, 1e-12) < band)


def transfer_finetune(checkpoint: Checkpoint, new_data, ts: TrainSpec, sinks=(), tags: dict | None = None) -> TrainResult:
    """Start from all generator and critic weights of ``checkpoint`` and keep training on ``new_data``."""
    arr_shape = tuple(_as_array(new_data).shape[1:])
    if arr_shape != checkpoint.spec.data_shape:
        raise IncompatibleCheckpointError(
            f"checkpoint was trained on shape {checkpoint.spec.data_shape}, new data has shape {arr_shape}"
        )
    run_tags = {"transfer": True, "source_step": checkpoint.step}
    run_tags.update(tags or {})
    return train(checkpoint.spec, ts, new_data, sinks, init=checkpoint, resume=False, tags=run_tags)


def snapshot_samples(generator: Generator, n: int, seed: int = 0,
                     transform: AffineTransform | None = None) -> np.ndarray:
    """Draw ``n`` latent vectors from ``seed`` and return generator outputs.

    Images come back NHWC on the [-1, 1] pixel scale; points are mapped back
    through ``transform`` when one is given.
    """
    z = torch.randn(n, generator.latent_dim, generator=torch_generator(seed, "snapshot"))
    was_training = generator.training
    generator.eval()
    try:
        with torch.no_grad():
            out = generator(z)
    finally:
        generator.train(was_training)
    arr = to_nhwc(out) if out.dim() == 4 else out.cpu().numpy()
    arr = arr.astype(np.float64)
    if transform is not None:
        arr = transform.inverse(arr)
    return arr
