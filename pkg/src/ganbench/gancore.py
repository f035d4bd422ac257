"""Generator/critic architectures for points and images, adversarial losses, gradient penalty.

Four families:

* ``mlp_gan`` / ``mlp_wgan_gp`` -- three hidden Dense+LeakyReLU blocks and a
  Dense output.  Generators end in Tanh; the GAN discriminator ends in
  Sigmoid, the Wasserstein critic emits a raw score.
* ``dcgan`` / ``conv_wgan_gp`` -- a Dense->Reshape->3x transposed-conv
  generator for 28x28 images and a 4-block conv discriminator/critic.

Torch modules work in NCHW; image datasets are stored NHWC and converted at
the boundary (see :func:`to_nchw` / :func:`to_nhwc`).
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .errors import IncompatibleCheckpointError, InvalidSpecError, UnsupportedArchitectureError

logger = logging.getLogger(__name__)

FAMILIES = ("mlp_gan", "mlp_wgan_gp", "dcgan", "conv_wgan_gp")
WASSERSTEIN_FAMILIES = ("mlp_wgan_gp", "conv_wgan_gp")
MLP_FAMILIES = ("mlp_gan", "mlp_wgan_gp")
CHECKPOINT_FORMAT = "ganbench-checkpoint"
CHECKPOINT_VERSION = 1
CLAMP_EPS = 1e-7


@dataclass
class ModelSpec:
    family: str
    data_shape: tuple[int, ...]  # (d,) for points, (H, W, C) for images
    latent_dim: int | None = None
    hidden: tuple[int, ...] = (128, 128, 128)
    gen_channels: tuple[int, int, int] = (64, 32, 16)
    critic_channels: tuple[int, int, int, int] = (16, 32, 64, 64)
    leaky_slope: float = 0.2
    dropout: float = 0.3
    critic_batchnorm: bool = True
    gp_lambda: float = 10.0

    def __post_init__(self):
        self.data_shape = tuple(int(s) for s in self.data_shape)
        self.hidden = tuple(int(h) for h in self.hidden)
        self.gen_channels = tuple(int(c) for c in self.gen_channels)
        self.critic_channels = tuple(int(c) for c in self.critic_channels)
        if self.family not in FAMILIES:
            raise InvalidSpecError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.latent_dim is None:
            self.latent_dim = self.data_shape[0] if self.is_mlp else 100
        if self.latent_dim < 1:
            raise InvalidSpecError("latent_dim must be >= 1")
        if self.is_mlp:
            if len(self.data_shape) != 1 or self.data_shape[0] < 1:
                raise InvalidSpecError(f"{self.family} emits d-vectors; got data shape {self.data_shape}")
            if len(self.hidden) != 3:
                raise InvalidSpecError("MLP nets have exactly three hidden layers")
        else:
            if len(self.data_shape) != 3 or self.data_shape[:2] != (28, 28) or self.data_shape[2] not in (1, 3):
                raise InvalidSpecError(f"{self.family} emits 28x28xC images; got data shape {self.data_shape}")
            if len(self.gen_channels) != 3 or len(self.critic_channels) != 4:
                raise InvalidSpecError("conv plan needs 3 generator and 4 critic channel widths")

    @property
    def is_mlp(self) -> bool:
        return self.family in MLP_FAMILIES

    @property
    def is_wasserstein(self) -> bool:
        return self.family in WASSERSTEIN_FAMILIES

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(**d)

    def spec_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


class Generator(nn.Module):
    def __init__(self, net: nn.Sequential, latent_dim: int):
        super().__init__()
        self.net = net
        self.latent_dim = latent_dim

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return self.net(z)


class Critic(nn.Module):
    """Discriminator (sigmoid head) or Wasserstein critic (raw score)."""

    def __init__(self, net: nn.Sequential, has_output_sigmoid: bool):
        super().__init__()
        self.net = net
        self.has_output_sigmoid = has_output_sigmoid

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x).reshape(-1)


def _mlp(in_dim, hidden, out_dim, slope, head):
    layers = []
    prev = in_dim
    for h in hidden:
        layers += [nn.Linear(prev, h), nn.LeakyReLU(slope)]
        prev = h
    layers.append(nn.Linear(prev, out_dim))
    if head is not None:
        layers.append(head)
    return nn.Sequential(*layers)


def _conv_generator(spec: ModelSpec) -> nn.Sequential:
    c0, c1, c2 = spec.gen_channels
    out_c = spec.data_shape[2]
    wgan = spec.is_wasserstein

    def act(first):
        # WGAN-GP generator uses ReLU in its first two blocks
        return nn.ReLU() if (wgan and first) else nn.LeakyReLU(spec.leaky_slope)

    return nn.Sequential(
        nn.Linear(spec.latent_dim, c0 * 7 * 7),
        act(True),
        nn.Unflatten(1, (c0, 7, 7)),
        nn.ConvTranspose2d(c0, c1, 4, stride=2, padding=1),  # 14x14
        nn.BatchNorm2d(c1),
        act(True),
        nn.ConvTranspose2d(c1, c2, 4, stride=2, padding=1),  # 28x28
        nn.BatchNorm2d(c2),
        act(False),
        nn.ConvTranspose2d(c2, out_c, 3, stride=1, padding=1),
        nn.Tanh(),
    )


def _conv_critic(spec: ModelSpec) -> nn.Sequential:
    in_c = spec.data_shape[2]
    ch = spec.critic_channels
    # (kernel, stride): 28 -> 14 -> 7 -> 4 -> 4
    geometry = ((4, 2), (4, 2), (3, 2), (3, 1))
    layers = []
    prev = in_c
    for i, (c, (k, s)) in enumerate(zip(ch, geometry)):
        layers.append(nn.Conv2d(prev, c, k, stride=s, padding=1))
        if i > 0 and spec.critic_batchnorm:
            layers.append(nn.BatchNorm2d(c))
        layers += [nn.LeakyReLU(spec.leaky_slope), nn.Dropout(spec.dropout)]
        prev = c
    layers += [nn.Flatten(), nn.Linear(prev * 4 * 4, 1)]
    if not spec.is_wasserstein:
        layers.append(nn.Sigmoid())
    return nn.Sequential(*layers)


def build_model(spec: ModelSpec, init_seed: int = 0) -> tuple[Generator, Critic]:
    """Construct the generator and critic for ``spec`` with seeded initialization."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(init_seed)
        if spec.is_mlp:
            d = spec.data_shape[0]
            g = _mlp(spec.latent_dim, spec.hidden, d, spec.leaky_slope, nn.Tanh())
            c = _mlp(d, spec.hidden, 1, spec.leaky_slope, None if spec.is_wasserstein else nn.Sigmoid())
        else:
            g = _conv_generator(spec)
            c = _conv_critic(spec)
    return Generator(g, spec.latent_dim), Critic(c, not spec.is_wasserstein)


_LAYER_NAMES = {
    nn.Linear: "Dense",
    nn.LeakyReLU: "Leaky ReLU",
    nn.ReLU: "ReLU",
    nn.Tanh: "Tanh",
    nn.Sigmoid: "Sigmoid",
    nn.Unflatten: "Reshape",
    nn.ConvTranspose2d: "Transposed Conv2D",
    nn.Conv2d: "Conv2D",
    nn.BatchNorm2d: "Batch Norm",
    nn.Dropout: "Dropout",
}


def layer_types(net: nn.Module) -> list[str]:
    """Layer-kind sequence in forward order; Flatten is plumbing and omitted."""
    seq = net.net if hasattr(net, "net") else net
    return [_LAYER_NAMES[type(m)] for m in seq if not isinstance(m, nn.Flatten)]


def count_parameters(net: nn.Module) -> int:
    return sum(p.numel() for p in net.parameters())


def to_nchw(images) -> torch.Tensor:
    t = torch.as_tensor(np.asarray(images, dtype=np.float32))
    return t.permute(0, 3, 1, 2).contiguous()


def to_nhwc(t: torch.Tensor) -> np.ndarray:
    return t.detach().permute(0, 2, 3, 1).cpu().numpy()


def vanilla_losses(d_real: torch.Tensor, d_fake: torch.Tensor, eps: float = CLAMP_EPS):
    """Cross-entropy discriminator loss and non-saturating generator loss.

    Scores are post-sigmoid probabilities; values are clamped to
    ``[eps, 1 - eps]`` before taking logs.
    """
    if bool(((d_real <= 0) | (d_real >= 1)).any()) or bool(((d_fake <= 0) | (d_fake >= 1)).any()):
        logger.debug("vanilla_losses: scores at 0/1 clamped with eps=%g", eps)
    d_real = d_real.clamp(eps, 1 - eps)
    d_fake = d_fake.clamp(eps, 1 - eps)
    d_loss = -torch.log(d_real).mean() - torch.log1p(-d_fake).mean()
    g_loss = -torch.log(d_fake).mean()
    return d_loss, g_loss


def wasserstein_losses(c_real: torch.Tensor, c_fake: torch.Tensor):
    c_loss = c_fake.mean() - c_real.mean()
    g_loss = -c_fake.mean()
    return c_loss, g_loss


def gradient_penalty(
    critic: nn.Module,
    real: torch.Tensor,
    fake: torch.Tensor,
    lam: float = 10.0,
    generator: torch.Generator | None = None,
    eps: torch.Tensor | None = None,
) -> torch.Tensor:
    """``lam * mean_i (||grad C(x_hat_i)||_2 - 1)^2`` on random real/fake interpolates.

    ``eps`` (one mixing weight per sample) may be passed explicitly; otherwise
    it is drawn uniformly from ``generator``.
    """
    if real.shape != fake.shape:
        raise ValueError(f"real and fake batches differ in shape: {tuple(real.shape)} vs {tuple(fake.shape)}")
    b = real.shape[0]
    if eps is None:
        eps = torch.rand((b,), generator=generator, dtype=real.dtype)
    eps = eps.reshape((b,) + (1,) * (real.dim() - 1)).to(real.dtype)
    x_hat = (eps * real.detach() + (1 - eps) * fake.detach()).requires_grad_(True)
    out = critic(x_hat)
    grad = None
    if out.requires_grad:
        try:
            (grad,) = torch.autograd.grad(out.sum(), x_hat, create_graph=True, allow_unused=True)
        except RuntimeError as exc:
            raise UnsupportedArchitectureError(f"critic is not twice differentiable: {exc}") from exc
    if grad is None:
        grad = torch.zeros_like(x_hat)
    norm = grad.reshape(b, -1).norm(2, dim=1)
    pen = lam * ((norm - 1.0) ** 2).mean()
    if pen.requires_grad and not getattr(critic, "_gp_checked", False):
        # first use only: make sure the penalty itself can be differentiated
        params = [p for p in critic.parameters() if p.requires_grad]
        try:
            torch.autograd.grad(pen, params or [x_hat], retain_graph=True, allow_unused=True)
        except RuntimeError as exc:
            raise UnsupportedArchitectureError(f"critic is not twice differentiable: {exc}") from exc
        critic._gp_checked = True
    return pen


def params_hash(*modules: nn.Module) -> str:
    """SHA-256 over all named parameters and buffers, in state-dict order."""
    h = hashlib.sha256()
    for m in modules:
        for name, t in m.state_dict().items():
            h.update(name.encode())
            h.update(t.detach().cpu().contiguous().numpy().tobytes())
    return h.hexdigest()


@dataclass
class Checkpoint:
    spec: ModelSpec
    generator_state: dict
    critic_state: dict
    step: int = 0
    optimizer_state: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def build(self) -> tuple[Generator, Critic]:
        g, c = build_model(self.spec)
        g.load_state_dict(self.generator_state)
        c.load_state_dict(self.critic_state)
        return g, c


def save_checkpoint(
    path: str | Path,
    spec: ModelSpec,
    generator: nn.Module,
    critic: nn.Module,
    step: int = 0,
    optimizer_state: dict | None = None,
    extra: dict | None = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "spec": spec.to_dict(),
            "spec_hash": spec.spec_hash(),
            "generator": generator.state_dict(),
            "critic": critic.state_dict(),
            "step": int(step),
            "optimizers": optimizer_state or {},
            "extra": extra or {},
        },
        path,
    )
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    blob = torch.load(path, map_location="cpu", weights_only=True)
    if blob.get("format") != CHECKPOINT_FORMAT or blob.get("version") != CHECKPOINT_VERSION:
        raise IncompatibleCheckpointError(f"{path}: unrecognised checkpoint format")
    spec = ModelSpec.from_dict(blob["spec"])
    if spec.spec_hash() != blob["spec_hash"]:
        raise IncompatibleCheckpointError(f"{path}: spec hash mismatch")
    return Checkpoint(spec, blob["generator"], blob["critic"], blob["step"], blob["optimizers"], blob["extra"])
