"""Coupled adversarial training of two translators with cycle consistency.

``G_B`` maps domain A to B and ``G_A`` maps B to A. Each domain has a
discriminator judging real images against translations into that domain.
One training step updates both discriminators on real-vs-translated binary
cross-entropy, then both generators on the non-saturating adversarial loss
plus ``cyclic_weight`` times the mean squared reconstruction errors
``|x_A - G_A(G_B(x_A))|`` and ``|x_B - G_B(G_A(x_B))|``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .checkpoint import read_archive, write_archive
from .data.records import ImageRecord, stack_pixels
from .ndtensor import OptimizerState, adam_step, bce_logit_grad, bce_loss, mse_loss, mse_loss_grad
from .nets import Discriminator, DiscriminatorConfig, Generator, GeneratorConfig, init_networks

log = logging.getLogger(__name__)

NETWORKS = ("G_A", "G_B", "D_A", "D_B")


@dataclass
class TrainingConfig:
    batch_size: int = 4
    total_steps: int = 2000
    lr_generator: float = 2e-4
    lr_discriminator: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    cyclic_weight: float = 10.0
    seed: int = 0
    checkpoint_interval: int = 0  # 0 writes only the final checkpoint
    dtype: str = "float32"

    def validate(self) -> None:
        if self.batch_size < 2:
            raise ValueError(f"batch_size must be at least 2 for batchnorm, got {self.batch_size}")
        if self.cyclic_weight < 0:
            raise ValueError(f"cyclic_weight must be non-negative, got {self.cyclic_weight}")
        if self.total_steps < 0 or self.checkpoint_interval < 0:
            raise ValueError("total_steps and checkpoint_interval must be non-negative")
        if self.dtype not in ("float32", "float64"):
            raise ValueError(f"dtype must be float32 or float64, got {self.dtype!r}")


@dataclass
class LossRecord:
    step: int
    d_loss_A: float
    d_loss_B: float
    g_adv_loss_A: float
    g_adv_loss_B: float
    cyclic_loss_A: float
    cyclic_loss_B: float

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


class NonFiniteLossError(FloatingPointError):
    def __init__(self, step: int, losses: dict[str, float], checkpoint: str | None = None):
        self.step, self.losses, self.checkpoint = step, losses, checkpoint
        where = f"; last checkpoint: {checkpoint}" if checkpoint else "; no checkpoint written yet"
        super().__init__(f"non-finite loss at step {step}: {losses}{where}")


@dataclass
class _Sampler:
    """Epoch-wise reshuffled index stream driven by the trainer's RNG."""

    n: int
    order: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    cursor: int = 0

    def next(self, rng: np.random.Generator, batch_size: int) -> np.ndarray:
        if self.cursor + batch_size > len(self.order):
            self.order = rng.permutation(self.n)
            self.cursor = 0
        idx = self.order[self.cursor:self.cursor + batch_size]
        self.cursor += batch_size
        return idx


@dataclass
class TrainerState:
    G_A: Generator
    G_B: Generator
    D_A: Discriminator
    D_B: Discriminator
    optimizers: dict[str, OptimizerState]
    config: TrainingConfig
    step: int = 0
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    samplers: dict[str, _Sampler] = field(default_factory=dict)

    def network(self, name: str):
        return getattr(self, name)

    @property
    def dtype(self):
        return np.dtype(self.config.dtype)


def init_state(config: TrainingConfig, gen_cfg: GeneratorConfig | None = None,
               disc_cfg: DiscriminatorConfig | None = None) -> TrainerState:
    config.validate()
    gen_cfg, disc_cfg = gen_cfg or GeneratorConfig(), disc_cfg or DiscriminatorConfig()
    nets = init_networks(gen_cfg, disc_cfg, config.seed, np.dtype(config.dtype))
    opts = {}
    for name in NETWORKS:
        lr = config.lr_generator if name.startswith("G") else config.lr_discriminator
        opts[name] = OptimizerState(lr=lr, beta1=config.beta1, beta2=config.beta2)
    return TrainerState(*nets, optimizers=opts, config=config,
                        rng=np.random.default_rng([config.seed, 1]))


def translate_chain(G_A, G_B, batch_A: np.ndarray, batch_B: np.ndarray):
    """``(x_AB, x_BA, x_ABA, x_BAB)`` for any pair of image-to-image callables."""
    if batch_A.shape[1:] != batch_B.shape[1:]:
        raise ValueError(f"domain batches differ in image shape: {batch_A.shape} vs {batch_B.shape}")
    x_ab = G_B(batch_A)
    x_ba = G_A(batch_B)
    x_aba = G_A(x_ab)
    x_bab = G_B(x_ba)
    for name, src, out in (("x_AB", batch_A, x_ab), ("x_BA", batch_B, x_ba),
                           ("x_ABA", batch_A, x_aba), ("x_BAB", batch_B, x_bab)):
        if out.shape != src.shape:
            raise ValueError(f"{name} has shape {out.shape}, expected {src.shape}")
    return x_ab, x_ba, x_aba, x_bab


def _step_params(net, opt: OptimizerState) -> None:
    params = net.parameters()
    grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in params]
    adam_step([p.data for p in params], grads, opt)


def _check_finite(step: int, losses: dict[str, float]) -> None:
    if not all(math.isfinite(v) for v in losses.values()):
        raise NonFiniteLossError(step, losses)


def discriminator_update(D: Discriminator, real: np.ndarray, fake: np.ndarray,
                         opt: OptimizerState | None, step: int = 0) -> float:
    """One real-vs-translated BCE step; ``fake`` is treated as a constant."""
    D.zero_grad()
    _, p_real, _, c_real = D.forward(real, True)
    _, p_fake, _, c_fake = D.forward(fake, True)
    loss = 0.5 * (bce_loss(p_real, 1.0) + bce_loss(p_fake, 0.0))
    _check_finite(step, {"d_loss": loss})
    D.backward(c_real, 0.5 * bce_logit_grad(p_real, 1.0), input_grad=False)
    D.backward(c_fake, 0.5 * bce_logit_grad(p_fake, 0.0), input_grad=False)
    if opt is not None:
        _step_params(D, opt)
    return loss


def adversarial_gradient(D: Discriminator, fake: np.ndarray) -> tuple[float, np.ndarray]:
    """Non-saturating loss ``-log D(fake)`` and its gradient w.r.t. ``fake``.

    The discriminator's own parameter gradients are discarded.
    """
    _, p, _, cache = D.forward(fake, True)
    grad = D.backward(cache, bce_logit_grad(p, 1.0))
    D.zero_grad()
    return bce_loss(p, 1.0), grad


def generator_gradients(state: TrainerState, batch_A: np.ndarray, batch_B: np.ndarray,
                        cyclic_weight: float | None = None, forward=None) -> dict[str, float]:
    """Fill ``G_A``/``G_B`` gradients for the composite generator objective.

    Returns the individual loss terms. ``forward`` may carry the cached
    translation chain from earlier in the same step.
    """
    lam = state.config.cyclic_weight if cyclic_weight is None else cyclic_weight
    G_A, G_B = state.G_A, state.G_B
    if forward is None:
        forward = _forward_chain(state, batch_A, batch_B)
    (x_ab, c_ab), (x_ba, c_ba), (x_aba, c_aba), (x_bab, c_bab) = forward
    adv_A, g_ba = adversarial_gradient(state.D_A, x_ba)
    adv_B, g_ab = adversarial_gradient(state.D_B, x_ab)
    cyc_A, cyc_B = mse_loss(x_aba, batch_A), mse_loss(x_bab, batch_B)
    _check_finite(state.step + 1, {"g_adv_loss_A": adv_A, "g_adv_loss_B": adv_B,
                                   "cyclic_loss_A": cyc_A, "cyclic_loss_B": cyc_B})
    G_A.zero_grad()
    G_B.zero_grad()
    # second translation of each cycle first, so both generators accumulate in the same order
    g_ab = g_ab + G_A.backward(c_aba, lam * mse_loss_grad(x_aba, batch_A))
    g_ba = g_ba + G_B.backward(c_bab, lam * mse_loss_grad(x_bab, batch_B))
    G_B.backward(c_ab, g_ab, input_grad=False)
    G_A.backward(c_ba, g_ba, input_grad=False)
    return {"g_adv_loss_A": adv_A, "g_adv_loss_B": adv_B, "cyclic_loss_A": cyc_A, "cyclic_loss_B": cyc_B}


def generator_objective(state: TrainerState, batch_A, batch_B, cyclic_weight: float | None = None) -> float:
    """Composite generator loss, evaluated without touching any gradients or statistics."""
    lam = state.config.cyclic_weight if cyclic_weight is None else cyclic_weight
    saved = _snapshot_buffers(state)
    try:
        (x_ab, _), (x_ba, _), (x_aba, _), (x_bab, _) = _forward_chain(state, batch_A, batch_B)
        adv_A = bce_loss(state.D_A.forward(x_ba, True)[1], 1.0)
        adv_B = bce_loss(state.D_B.forward(x_ab, True)[1], 1.0)
        return adv_A + adv_B + lam * (mse_loss(x_aba, batch_A) + mse_loss(x_bab, batch_B))
    finally:
        _restore_buffers(state, saved)


def _snapshot_buffers(state):
    return {n: {k: t.data.copy() for k, t in state.network(n).named_buffers().items()} for n in NETWORKS}


def _restore_buffers(state, saved):
    for n in NETWORKS:
        for k, t in state.network(n).named_buffers().items():
            t.data[...] = saved[n][k]


def _forward_chain(state: TrainerState, batch_A, batch_B):
    x_ab = state.G_B.forward(batch_A, True)
    x_ba = state.G_A.forward(batch_B, True)
    x_aba = state.G_A.forward(x_ab[0], True)
    x_bab = state.G_B.forward(x_ba[0], True)
    return x_ab, x_ba, x_aba, x_bab


def train_step(state: TrainerState, batch_A: np.ndarray, batch_B: np.ndarray) -> LossRecord:
    """Advance ``state`` by one discriminator update and one generator update."""
    dtype = state.dtype
    batch_A, batch_B = np.asarray(batch_A, dtype), np.asarray(batch_B, dtype)
    if batch_A.shape != batch_B.shape:
        raise ValueError(f"domain batches differ in shape: {batch_A.shape} vs {batch_B.shape}")
    step = state.step + 1
    forward = _forward_chain(state, batch_A, batch_B)
    x_ab, x_ba = forward[0][0], forward[1][0]
    opts = state.optimizers
    d_A = discriminator_update(state.D_A, batch_A, x_ba, opts["D_A"], step)
    d_B = discriminator_update(state.D_B, batch_B, x_ab, opts["D_B"], step)
    losses = generator_gradients(state, batch_A, batch_B, forward=forward)
    _step_params(state.G_A, opts["G_A"])
    _step_params(state.G_B, opts["G_B"])
    state.step = step
    return LossRecord(step, d_A, d_B, **losses)


def _as_array(dataset, dtype) -> np.ndarray:
    if isinstance(dataset, np.ndarray):
        return dataset.astype(dtype, copy=False)
    if dataset and isinstance(dataset[0], ImageRecord):
        return stack_pixels(dataset, dtype)
    return np.asarray(dataset, dtype)


class LossLog:
    """Append-only CSV with one row per training step."""

    def __init__(self, path):
        self.path = Path(path)
        new = not self.path.exists() or self.path.stat().st_size == 0
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a", newline="")
        self._writer = csv.DictWriter(self._fh, fieldnames=LossRecord.field_names())
        if new:
            self._writer.writeheader()

    def append(self, record: LossRecord) -> None:
        self._writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in asdict(record).items()})
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def read_loss_log(path) -> list[LossRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [LossRecord(int(r["step"]), *(float(r[k]) for k in LossRecord.field_names()[1:])) for r in rows]


def train(config: TrainingConfig, dataset_A, dataset_B, state: TrainerState | None = None,
          gen_cfg: GeneratorConfig | None = None, disc_cfg: DiscriminatorConfig | None = None,
          checkpoint_dir=None, log_path=None, progress_every: int = 0):
    """Run until ``config.total_steps``; returns ``(state, loss records of this call)``.

    Passing a restored ``state`` resumes where it stopped.
    """
    config.validate()
    if state is None:
        state = init_state(config, gen_cfg, disc_cfg)
    dtype = state.dtype
    data = {"A": _as_array(dataset_A, dtype), "B": _as_array(dataset_B, dtype)}
    for name, arr in data.items():
        if len(arr) < config.batch_size:
            raise ValueError(f"dataset {name} has {len(arr)} images, fewer than batch_size {config.batch_size}")
        sampler = state.samplers.setdefault(name, _Sampler(len(arr)))
        if sampler.n != len(arr):
            raise ValueError(f"dataset {name} has {len(arr)} images but the state was trained on {sampler.n}")
    loss_log = LossLog(log_path) if log_path else None
    last_ckpt = None
    records = []
    try:
        while state.step < config.total_steps:
            idx_A = state.samplers["A"].next(state.rng, config.batch_size)
            idx_B = state.samplers["B"].next(state.rng, config.batch_size)
            try:
                record = train_step(state, data["A"][idx_A], data["B"][idx_B])
            except NonFiniteLossError as exc:
                raise NonFiniteLossError(exc.step, exc.losses, last_ckpt) from None
            records.append(record)
            if loss_log:
                loss_log.append(record)
            if progress_every and state.step % progress_every == 0:
                log.info("step %d: %s", state.step, record)
            if checkpoint_dir and config.checkpoint_interval and state.step % config.checkpoint_interval == 0:
                last_ckpt = str(Path(checkpoint_dir) / f"step_{state.step:07d}.ckpt")
                save_checkpoint(state, last_ckpt)
        if checkpoint_dir:
            final = Path(checkpoint_dir) / "final.ckpt"
            save_checkpoint(state, final)
    finally:
        if loss_log:
            loss_log.close()
    return state, records


def save_checkpoint(state: TrainerState, path) -> None:
    arrays = {}
    for name in NETWORKS:
        for key, arr in state.network(name).state_dict().items():
            arrays[f"{name}/{key}"] = arr
        opt = state.optimizers[name]
        for i, (m, v) in enumerate(zip(opt.m, opt.v)):
            arrays[f"opt/{name}/m{i}"] = m
            arrays[f"opt/{name}/v{i}"] = v
    for name, sampler in state.samplers.items():
        arrays[f"sampler/{name}/order"] = sampler.order
    config = {"generator": asdict(state.G_A.config), "discriminator": asdict(state.D_A.config),
              "training": asdict(state.config)}
    meta = {
        "step": state.step,
        "rng": state.rng.bit_generator.state,
        "optimizers": {n: {"lr": o.lr, "beta1": o.beta1, "beta2": o.beta2, "eps": o.eps, "step": o.step,
                           "n_moments": len(o.m)} for n, o in state.optimizers.items()},
        "samplers": {n: {"n": s.n, "cursor": s.cursor} for n, s in state.samplers.items()},
    }
    write_archive(path, config, meta, arrays)


def load_checkpoint(path) -> TrainerState:
    config, meta, arrays = read_archive(path)
    tcfg = TrainingConfig(**config["training"])
    state = init_state(tcfg, GeneratorConfig(**config["generator"]), DiscriminatorConfig(**config["discriminator"]))
    for name in NETWORKS:
        prefix = f"{name}/"
        state.network(name).load_state_dict({k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)})
        o = meta["optimizers"][name]
        state.optimizers[name] = OptimizerState(
            lr=o["lr"], beta1=o["beta1"], beta2=o["beta2"], eps=o["eps"], step=o["step"],
            m=[arrays[f"opt/{name}/m{i}"] for i in range(o["n_moments"])],
            v=[arrays[f"opt/{name}/v{i}"] for i in range(o["n_moments"])],
        )
    state.step = meta["step"]
    state.rng.bit_generator.state = meta["rng"]
    state.samplers = {n: _Sampler(s["n"], arrays[f"sampler/{n}/order"], s["cursor"])
                      for n, s in meta["samplers"].items()}
    return state


def load_networks(path, dtype=None):
    """``(G_A, G_B, D_A, D_B)`` from a checkpoint, optionally cast to ``dtype``."""
    state = load_checkpoint(path)
    nets = [state.network(n) for n in NETWORKS]
    if dtype is not None:
        for net in nets:
            for t in list(net.named_parameters().values()) + list(net.named_buffers().values()):
                t.data = t.data.astype(dtype)
    return tuple(nets)


def mean_cyclic(records: list[LossRecord]) -> np.ndarray:
    return np.array([(r.cyclic_loss_A + r.cyclic_loss_B) / 2 for r in records])

