import math

import numpy as np
import pytest
import torch
from hypothesis import given, strategies as st
from torch import nn

from ganbench import gancore as gc
from ganbench.errors import IncompatibleCheckpointError, InvalidSpecError, UnsupportedArchitectureError
from oracles import central_differences, scalar_vanilla, scalar_wasserstein

MLP_G = ["Dense", "Leaky ReLU"] * 3 + ["Dense", "Tanh"]
MLP_D = ["Dense", "Leaky ReLU"] * 3 + ["Dense", "Sigmoid"]
MLP_C = ["Dense", "Leaky ReLU"] * 3 + ["Dense"]
DCGAN_G = ["Dense", "Leaky ReLU", "Reshape", "Transposed Conv2D", "Batch Norm", "Leaky ReLU",
           "Transposed Conv2D", "Batch Norm", "Leaky ReLU", "Transposed Conv2D", "Tanh"]
CONV_D_BODY = ["Conv2D", "Leaky ReLU", "Dropout",
               "Conv2D", "Batch Norm", "Leaky ReLU", "Dropout",
               "Conv2D", "Batch Norm", "Leaky ReLU", "Dropout",
               "Conv2D", "Batch Norm", "Leaky ReLU", "Dropout"]
# a Dense projection to one logit sits before the Sigmoid
DCGAN_D = CONV_D_BODY + ["Dense", "Sigmoid"]
WGAN_G = ["Dense", "ReLU", "Reshape", "Transposed Conv2D", "Batch Norm", "ReLU",
          "Transposed Conv2D", "Batch Norm", "Leaky ReLU", "Transposed Conv2D", "Tanh"]
WGAN_C = CONV_D_BODY + ["Dense"]


@pytest.mark.parametrize("family,shape,gen,crit", [
    ("mlp_gan", (2,), MLP_G, MLP_D),
    ("mlp_wgan_gp", (3,), MLP_G, MLP_C),
    ("dcgan", (28, 28, 1), DCGAN_G, DCGAN_D),
    ("conv_wgan_gp", (28, 28, 1), WGAN_G, WGAN_C),
])
def test_architecture_fidelity(family, shape, gen, crit):
    g, c = gc.build_model(gc.ModelSpec(family, shape))
    assert gc.layer_types(g) == gen
    assert gc.layer_types(c) == crit
    assert c.has_output_sigmoid == (family in ("mlp_gan", "dcgan"))


def test_mlp_zero_latent_in_range():
    g, _ = gc.build_model(gc.ModelSpec("mlp_gan", (2,), latent_dim=2, hidden=(64, 64, 64)))
    out = g(torch.zeros(1, 2))
    assert out.shape == (1, 2)
    assert torch.all(out.abs() < 1)


def test_dcgan_output_shape():
    spec = gc.ModelSpec("dcgan", (28, 28, 1))
    assert spec.latent_dim == 100
    g, c = gc.build_model(spec)
    g.eval()
    out = g(torch.randn(4, 100))
    assert out.shape == (4, 1, 28, 28)
    assert gc.to_nhwc(out).shape == (4, 28, 28, 1)
    assert c(out).shape == (4,)


def test_latent_defaults():
    assert gc.ModelSpec("mlp_gan", (2,)).latent_dim == 2
    assert gc.ModelSpec("mlp_wgan_gp", (3,)).latent_dim == 3
    assert gc.ModelSpec("conv_wgan_gp", (28, 28, 3)).latent_dim == 100


@pytest.mark.parametrize("family,shape", [("mlp_gan", (28, 28, 1)), ("dcgan", (2,)), ("dcgan", (32, 32, 1)),
                                          ("nope", (2,))])
def test_invalid_spec(family, shape):
    with pytest.raises(InvalidSpecError):
        gc.ModelSpec(family, shape)


def test_build_determinism():
    spec = gc.ModelSpec("dcgan", (28, 28, 1))
    a = gc.build_model(spec, 3)
    b = gc.build_model(spec, 3)
    assert gc.params_hash(*a) == gc.params_hash(*b)
    assert gc.params_hash(*gc.build_model(spec, 4)) != gc.params_hash(*a)
    assert gc.count_parameters(a[0]) == gc.count_parameters(b[0])


@given(z=st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3))
def test_generator_range(z):
    g, _ = gc.build_model(gc.ModelSpec("mlp_wgan_gp", (3,)))
    out = g(torch.tensor([z], dtype=torch.float32))
    assert torch.all(out.abs() <= 1)


def test_generator_range_images():
    g, _ = gc.build_model(gc.ModelSpec("conv_wgan_gp", (28, 28, 3)))
    g.eval()
    out = g(torch.randn(8, 100) * 10)
    assert out.abs().max() <= 1


def test_critic_heads():
    torch.manual_seed(0)
    x = torch.randn(256, 2) * 50
    _, d = gc.build_model(gc.ModelSpec("mlp_gan", (2,)))
    _, c = gc.build_model(gc.ModelSpec("mlp_wgan_gp", (2,)))
    s = d(x)
    assert torch.all((s >= 0) & (s <= 1))
    r = c(x)
    assert (r.abs() > 1).any()


def test_vanilla_closed_form():
    d, g = gc.vanilla_losses(torch.tensor([0.5], dtype=torch.float64), torch.tensor([0.5], dtype=torch.float64))
    assert d.item() == pytest.approx(2 * math.log(2), abs=1e-12)
    assert g.item() == pytest.approx(math.log(2), abs=1e-12)


def test_vanilla_perfect_discriminator():
    d, _ = gc.vanilla_losses(torch.tensor([1.0 - 1e-9]), torch.tensor([1e-9]))
    assert d.item() < 1e-6


def test_vanilla_clamps_extremes():
    d, g = gc.vanilla_losses(torch.tensor([0.0, 1.0]), torch.tensor([0.0, 1.0]))
    assert math.isfinite(d.item()) and math.isfinite(g.item())


@given(st.lists(st.floats(0.01, 0.99), min_size=1, max_size=20),
       st.lists(st.floats(0.01, 0.99), min_size=1, max_size=20))
def test_vanilla_matches_scalar_oracle(dr, df):
    d, g = gc.vanilla_losses(torch.tensor(dr, dtype=torch.float64), torch.tensor(df, dtype=torch.float64))
    od, og = scalar_vanilla(dr, df)
    assert d.item() == pytest.approx(od, abs=1e-6)
    assert g.item() == pytest.approx(og, abs=1e-6)


def test_wasserstein_examples():
    a = torch.tensor([0.3, -1.2, 4.0])
    c, _ = gc.wasserstein_losses(a, a.clone())
    assert c.item() == 0
    c, g = gc.wasserstein_losses(torch.tensor([1.0]), torch.tensor([0.0]))
    assert c.item() == -1 and g.item() == 0


floats = st.floats(-100, 100)


@given(st.lists(floats, min_size=1, max_size=20), st.lists(floats, min_size=1, max_size=20))
def test_wasserstein_oracle_and_antisymmetry(cr, cf):
    a = torch.tensor(cr, dtype=torch.float64)
    b = torch.tensor(cf, dtype=torch.float64)
    c, g = gc.wasserstein_losses(a, b)
    oc, og = scalar_wasserstein(cr, cf)
    assert c.item() == pytest.approx(oc, abs=1e-6)
    assert g.item() == pytest.approx(og, abs=1e-6)
    assert gc.wasserstein_losses(b, a)[0].item() == pytest.approx(-c.item(), abs=1e-9)


def _unit_linear(d, seed):
    gen = torch.Generator().manual_seed(seed)
    lin = nn.Linear(d, 1).double()
    with torch.no_grad():
        w = torch.randn(1, d, generator=gen, dtype=torch.float64)
        lin.weight.copy_(w / w.norm())
        lin.bias.fill_(0.7)
    return lin


@pytest.mark.parametrize("shape", [(16, 2), (8, 3), (4, 1, 5, 5)])
def test_gp_zero_for_unit_linear(shape):
    d = int(np.prod(shape[1:]))
    lin = _unit_linear(d, 1)
    critic = nn.Sequential(nn.Flatten(), lin) if len(shape) > 2 else lin
    real = torch.randn(shape, dtype=torch.float64)
    fake = torch.randn(shape, dtype=torch.float64)
    assert gc.gradient_penalty(critic, real, fake, 10.0).item() == pytest.approx(0.0, abs=1e-10)


def test_gp_constant_critic():
    lin = nn.Linear(3, 1).double()
    with torch.no_grad():
        lin.weight.zero_()
    real = torch.randn(5, 3, dtype=torch.float64)
    assert gc.gradient_penalty(lin, real, real + 1, 7.0).item() == pytest.approx(7.0)

    class Const(nn.Module):
        def forward(self, x):
            return torch.full((x.shape[0],), 2.0)

    assert gc.gradient_penalty(Const(), real, real, 3.0).item() == pytest.approx(3.0)


def test_gp_shape_mismatch():
    with pytest.raises(ValueError):
        gc.gradient_penalty(nn.Linear(2, 1), torch.zeros(3, 2), torch.zeros(4, 2))


class _NoSecondOrder(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x, grad):
        return 2 * x * grad[:, None]

    @staticmethod
    def backward(ctx, _):
        raise RuntimeError("second derivative not implemented")


class _Square(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x):
        ctx.save_for_backward(x)
        return (x * x).sum(dim=1)

    @staticmethod
    def backward(ctx, grad):
        (x,) = ctx.saved_tensors
        return _NoSecondOrder.apply(x, grad)


def test_gp_unsupported_architecture():
    class Critic(nn.Module):
        def __init__(self):
            super().__init__()
            self.lin = nn.Linear(2, 2)

        def forward(self, x):
            return _Square.apply(self.lin(x))

    real = torch.randn(4, 2)
    with pytest.raises(UnsupportedArchitectureError):
        gc.gradient_penalty(Critic(), real, real + 1)


@given(st.integers(0, 10_000))
def test_gp_nonnegative(seed):
    torch.manual_seed(seed)
    critic = nn.Sequential(nn.Linear(2, 8), nn.LeakyReLU(0.2), nn.Linear(8, 1))
    real, fake = torch.randn(6, 2), torch.randn(6, 2)
    assert gc.gradient_penalty(critic, real, fake).item() >= 0


def _tiny_critic(seed):
    torch.manual_seed(seed)
    return nn.Sequential(nn.Linear(2, 16), nn.Tanh(), nn.Linear(16, 1)).double()


def _total_loss(critic, real, fake, eps, lam):
    c_loss, _ = gc.wasserstein_losses(critic(real).reshape(-1), critic(fake).reshape(-1))
    return c_loss + gc.gradient_penalty(critic, real, fake, lam, eps=eps)


def fd_relative_error(seed):
    """Analytic vs central-difference parameter gradient of the critic objective."""
    critic = _tiny_critic(seed)
    gen = torch.Generator().manual_seed(seed)
    real = torch.randn(12, 2, generator=gen, dtype=torch.float64)
    fake = torch.randn(12, 2, generator=gen, dtype=torch.float64) * 2
    eps = torch.rand(12, generator=gen, dtype=torch.float64)
    lam = 10.0
    params = list(critic.parameters())
    assert sum(p.numel() for p in params) <= 200

    loss = _total_loss(critic, real, fake, eps, lam)
    analytic = torch.cat([g.reshape(-1) for g in torch.autograd.grad(loss, params)]).numpy()

    flat0 = torch.cat([p.detach().reshape(-1) for p in params]).numpy()

    def f(flat):
        with torch.no_grad():
            i = 0
            for p in params:
                n = p.numel()
                p.copy_(torch.from_numpy(flat[i:i + n]).reshape(p.shape))
                i += n
        return _total_loss(critic, real, fake, eps, lam).item()

    numeric = central_differences(f, flat0.copy())
    f(flat0)
    return np.linalg.norm(analytic - numeric) / max(np.linalg.norm(analytic), np.linalg.norm(numeric))


@pytest.mark.parametrize("seed", range(5))
def test_gp_finite_differences(seed):
    assert fd_relative_error(seed) < 1e-4


def test_checkpoint_round_trip(tmp_path):
    spec = gc.ModelSpec("dcgan", (28, 28, 1))
    g, c = gc.build_model(spec, 5)
    g.eval()
    z = torch.randn(4, 100, generator=torch.Generator().manual_seed(0))
    before = g(z).detach()
    path = gc.save_checkpoint(tmp_path / "x.pt", spec, g, c, step=12)
    ck = gc.load_checkpoint(path)
    assert ck.step == 12 and ck.spec == spec
    g2, c2 = ck.build()
    g2.eval()
    assert torch.equal(g2(z), before)
    assert gc.params_hash(g2, c2) == gc.params_hash(g, c)


def test_checkpoint_hash_validation(tmp_path):
    spec = gc.ModelSpec("mlp_gan", (2,))
    g, c = gc.build_model(spec)
    path = gc.save_checkpoint(tmp_path / "x.pt", spec, g, c)
    blob = torch.load(path, weights_only=True)
    blob["spec"]["hidden"] = [8, 8, 8]
    torch.save(blob, path)
    with pytest.raises(IncompatibleCheckpointError):
        gc.load_checkpoint(path)


def test_checkpoint_missing(tmp_path):
    with pytest.raises(FileNotFoundError):
        gc.load_checkpoint(tmp_path / "nope.pt")
