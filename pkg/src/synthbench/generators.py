"""Desk-scale generative models over binary rows, plus a grid-search harness.

Four trainable synthesizers (class-conditional Bernoulli baseline,
noisy-copy control, VAE, DPGAN) and a conditional GAN reduced to the
two pieces that matter for all-binary columns: the conditional vector
and training-by-sampling.

Label handling: VAE, DPGAN and the Bernoulli baseline train one model
per outcome class so class-proportional sampling is exact; CTGAN-lite
appends the label as an ordinary binary column and conditions on it.
Generated probabilities become bits by Bernoulli draw, never by
thresholding (a flag on sample() switches, for ablation only).
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from . import nets
from .dataset import LabeledDataset, sample_matched, PoolShortfallError
from .nets import (
    AdamState,
    MlpNet,
    TrainingDivergedError,
    adam_step,
    backward,
    bce_with_logits,
    check_finite,
    forward,
    init_mlp,
    mlp_backprop,
    per_sample_backward,
    sgd_step,
    sigmoid,
)
from .seeding import derive_seed, rng_from
from .similarity import similarity_report

KINDS = ("bernoulli", "noisy_copy", "vae", "dpgan", "ctgan", "identity")


@dataclass(frozen=True)
class GeneratorSpec:
    """Hyperparameters for one generator; unused fields are ignored per kind."""

    kind: str
    hidden: int = 128
    latent: int = 16
    lr: float = 1e-3
    epochs: int = 300
    batch: int = 64
    sigma: float = 0.0
    clip: float = 0.1
    flip_prob: float = 0.0
    cond_weight: float = 2.0  # scaled for BCE-GAN losses on binary columns
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.hidden < 1 or self.latent < 1 or self.epochs < 1 or self.batch < 1:
            raise ValueError("hidden, latent, epochs and batch must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.kind == "dpgan":
            if self.sigma < 0:
                raise ValueError("sigma must be >= 0")
            if self.clip <= 0:
                raise ValueError("clip must be positive")
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ValueError("flip_prob must be in [0, 1]")
        if self.cond_weight < 0:
            raise ValueError("cond_weight must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class VaeModel:
    """Encoder to (mean, log-variance), decoder to Bernoulli logits."""

    encoder: MlpNet
    decoder: MlpNet
    latent: int


@dataclass
class DpGanModel:
    generator: MlpNet
    discriminator: MlpNet
    sigma: float
    clip: float


@dataclass
class CondSampler:
    """Training-by-sampling tables for all-binary columns.

    For every conditionable column (both values present) the value
    weights are log(1 + count); probabilities are the normalised
    weights. raw_probs holds the plain count frequencies used when
    sampling without a forced condition.
    """

    n_columns: int
    cond_columns: np.ndarray
    value_probs: np.ndarray  # (n_columns, 2); zero rows for non-conditionable
    raw_probs: np.ndarray
    rows_by_cell: dict

    def draw(self, rng: np.random.Generator, size: int):
        """Sample (columns, values, matching row indices) for one batch."""
        cols = self.cond_columns[rng.integers(0, self.cond_columns.size, size)]
        vals = (rng.random(size) < self.value_probs[cols, 1]).astype(np.int64)
        rows = np.empty(size, dtype=np.intp)
        for i in range(size):
            candidates = self.rows_by_cell[(int(cols[i]), int(vals[i]))]
            rows[i] = candidates[rng.integers(0, candidates.size)]
        return cols, vals, rows

    def one_hot(self, cols: np.ndarray, vals: np.ndarray) -> np.ndarray:
        vec = np.zeros((cols.size, 2 * self.n_columns))
        vec[np.arange(cols.size), 2 * cols + vals] = 1.0
        return vec


def build_cond_sampler(matrix: np.ndarray) -> CondSampler:
    matrix = np.ascontiguousarray(matrix, dtype=np.uint8)
    n, c = matrix.shape
    ones = matrix.sum(axis=0, dtype=np.int64)
    cond_cols = np.flatnonzero((ones > 0) & (ones < n))
    if cond_cols.size == 0:
        raise ValueError("no conditionable columns (every column is constant)")
    value_probs = np.zeros((c, 2))
    raw_probs = np.zeros((c, 2))
    rows_by_cell = {}
    for col in cond_cols:
        counts = np.array([n - ones[col], ones[col]], dtype=np.float64)
        weights = np.log1p(counts)
        value_probs[col] = weights / weights.sum()
        raw_probs[col] = counts / n
        rows_by_cell[(int(col), 0)] = np.flatnonzero(matrix[:, col] == 0)
        rows_by_cell[(int(col), 1)] = np.flatnonzero(matrix[:, col] == 1)
    return CondSampler(c, cond_cols, value_probs, raw_probs, rows_by_cell)


@dataclass
class CtganLiteModel:
    generator: MlpNet
    discriminator: MlpNet
    latent: int
    n_columns: int  # features + label column
    label_column: int
    sampler: CondSampler


@dataclass
class GeneratorModel:
    """Trained generator plus everything sample() needs to emit a dataset."""

    kind: str
    spec: GeneratorSpec
    feature_names: tuple[str, ...]
    label_name: str
    prior_p1: float
    parts: dict = field(repr=False)
    traces: dict = field(default_factory=dict, repr=False)

    @property
    def feature_count(self) -> int:
        return len(self.feature_names)


# ---------------------------------------------------------------- baselines


def train_baseline(data: LabeledDataset, kind: str, spec: GeneratorSpec | None = None
                   ) -> GeneratorModel:
    """Control generators: per-class Bernoulli marginals, or noisy copying."""
    if kind not in ("bernoulli", "noisy_copy"):
        raise ValueError(f"not a baseline kind: {kind!r}")
    spec = spec or GeneratorSpec(kind=kind)
    prior = float((data.labels == 1).mean())
    if kind == "bernoulli":
        parts = {}
        for c in (0, 1):
            rows = data.features[data.labels == c]
            if rows.shape[0]:
                parts[c] = rows.mean(axis=0)
    else:
        parts = {
            "features": data.features,
            "labels": data.labels,
            "flip_prob": spec.flip_prob,
        }
    return GeneratorModel(
        kind=kind,
        spec=spec,
        feature_names=data.feature_names,
        label_name=data.label_name,
        prior_p1=prior,
        parts=parts,
    )


# ---------------------------------------------------------------------- VAE


def _train_vae_single(bits: np.ndarray, spec: GeneratorSpec, seed: int):
    n, d = bits.shape
    if n < spec.batch:
        raise ValueError(f"need at least batch={spec.batch} rows, got {n}")
    rng = rng_from(seed, "vae")
    z = spec.latent
    encoder = init_mlp(
        (d, spec.hidden, spec.hidden, 2 * z), ("relu", "relu", "linear"), rng
    )
    decoder = init_mlp(
        (z, spec.hidden, spec.hidden, d), ("relu", "relu", "linear"), rng
    )
    enc_state = AdamState.for_net(encoder)
    dec_state = AdamState.for_net(decoder)
    x_all = bits.astype(np.float64)
    trace = []
    for epoch in range(spec.epochs):
        order = rng.permutation(n)
        sums = np.zeros(3)
        n_batches = 0
        for bi, lo in enumerate(range(0, n, spec.batch)):
            idx = order[lo:lo + spec.batch]
            x = x_all[idx]
            b = idx.size
            enc_out, enc_cache = forward(encoder, x)
            mu, logvar = enc_out[:, :z], enc_out[:, z:]
            eps = rng.standard_normal((b, z))
            std = np.exp(0.5 * logvar)
            latent = mu + eps * std
            dec_logits, dec_cache = forward(decoder, latent)
            recon, dlogits = bce_with_logits(dec_logits, x)
            kl = float(0.5 * (np.exp(logvar) + mu * mu - 1.0 - logvar).sum()) / b
            loss = recon + kl
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, bi, "loss")
            dec_grads, dlatent = backward(decoder, dec_cache, dlogits)
            dmu = dlatent + mu / b
            dlogvar = dlatent * eps * 0.5 * std + 0.5 * (np.exp(logvar) - 1.0) / b
            enc_grads, _ = backward(
                encoder, enc_cache, np.concatenate([dmu, dlogvar], axis=1)
            )
            adam_step(decoder, dec_grads, dec_state, spec.lr)
            adam_step(encoder, enc_grads, enc_state, spec.lr)
            check_finite(decoder, epoch, bi)
            check_finite(encoder, epoch, bi)
            sums += (loss, recon, kl)
            n_batches += 1
        mean = sums / n_batches
        trace.append({"epoch": epoch, "loss": mean[0], "recon": mean[1], "kl": mean[2]})
    return VaeModel(encoder, decoder, z), trace


def train_vae(data: LabeledDataset, spec: GeneratorSpec) -> GeneratorModel:
    """One VAE per outcome class, trained on that class's feature rows."""
    if spec.kind != "vae":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'vae'")
    parts = {}
    traces = {}
    for c in (0, 1):
        rows = data.features[data.labels == c]
        if rows.shape[0] == 0:
            continue
        model, trace = _train_vae_single(rows, spec, derive_seed(spec.seed, "class", c))
        parts[c] = model
        traces[f"class{c}"] = trace
    return GeneratorModel(
        kind="vae",
        spec=spec,
        feature_names=data.feature_names,
        label_name=data.label_name,
        prior_p1=float((data.labels == 1).mean()),
        parts=parts,
        traces=traces,
    )


# -------------------------------------------------------------------- DPGAN


def _per_sample_disc_grads(disc, x_real, x_fake):
    """Per-example discriminator gradients, pairing real i with fake i.

    Each example's loss is BCE(D(real_i), 1) + BCE(D(fake_i), 0); the
    gradient keeps the batch axis so it can be clipped per example.
    """
    real_out, real_cache = forward(disc, x_real)
    fake_out, fake_cache = forward(disc, x_fake)
    g_real = sigmoid(real_out) - 1.0
    g_fake = sigmoid(fake_out)
    per_real, _ = per_sample_backward(disc, real_cache, g_real)
    per_fake, _ = per_sample_backward(disc, fake_cache, g_fake)
    per = [(wr + wf, br + bf) for (wr, br), (wf, bf) in zip(per_real, per_fake)]
    softplus_r = np.maximum(real_out, 0) + np.log1p(np.exp(-np.abs(real_out)))
    softplus_f = np.maximum(fake_out, 0) + np.log1p(np.exp(-np.abs(fake_out)))
    loss = float((softplus_r - real_out).mean() + softplus_f.mean())
    return per, loss


def clip_per_sample(per_grads, clip: float):
    """Scale each example's gradient to L2 norm <= clip (over all params).

    Returns (summed clipped gradients, per-example norms after clipping).
    """
    sq = None
    for gw, gb in per_grads:
        part = (gw * gw).sum(axis=(1, 2)) + (gb * gb).sum(axis=1)
        sq = part if sq is None else sq + part
    norms = np.sqrt(sq)
    scale = np.minimum(1.0, clip / np.maximum(norms, 1e-300))
    summed = [
        (np.einsum("b,bio->io", scale, gw), scale @ gb) for gw, gb in per_grads
    ]
    return summed, norms * scale


def _train_dpgan_single(bits: np.ndarray, spec: GeneratorSpec, seed: int):
    n, d = bits.shape
    if n < spec.batch:
        raise ValueError(f"need at least batch={spec.batch} rows, got {n}")
    rng = rng_from(seed, "dpgan")
    gen = init_mlp(
        (spec.latent, spec.hidden, spec.hidden, d), ("relu", "relu", "linear"), rng
    )
    disc = init_mlp(
        (d, spec.hidden, spec.hidden, 1), ("relu", "relu", "linear"), rng
    )
    x_all = bits.astype(np.float64)
    steps = n // spec.batch
    trace = []
    clip_norm_max = []
    for epoch in range(spec.epochs):
        order = rng.permutation(n)
        d_sum = g_sum = 0.0
        for step in range(steps):
            idx = order[step * spec.batch:(step + 1) * spec.batch]
            x = x_all[idx]
            b = idx.size
            noise = rng.standard_normal((b, spec.latent))
            fake_logits, _ = forward(gen, noise)
            fake = sigmoid(fake_logits)

            per, d_loss = _per_sample_disc_grads(disc, x, fake)
            summed, clipped_norms = clip_per_sample(per, spec.clip)
            clip_norm_max.append(float(clipped_norms.max()))
            if spec.sigma > 0:
                summed = [
                    (
                        gw + rng.normal(0.0, spec.sigma * spec.clip, gw.shape),
                        gb + rng.normal(0.0, spec.sigma * spec.clip, gb.shape),
                    )
                    for gw, gb in summed
                ]
            sgd_step(disc, [(gw / b, gb / b) for gw, gb in summed], spec.lr)
            check_finite(disc, epoch, step)

            noise2 = rng.standard_normal((b, spec.latent))
            fake_logits2, gen_cache = forward(gen, noise2)
            fake2 = sigmoid(fake_logits2)
            g_loss, _, dfake = mlp_backprop(disc, fake2, "gan_gen")
            gen_grads, _ = backward(gen, gen_cache, dfake * fake2 * (1.0 - fake2))
            sgd_step(gen, gen_grads, spec.lr)
            check_finite(gen, epoch, step)
            d_sum += d_loss
            g_sum += g_loss
        trace.append(
            {"epoch": epoch, "disc_loss": d_sum / steps, "gen_loss": g_sum / steps}
        )
    model = DpGanModel(gen, disc, spec.sigma, spec.clip)
    return model, trace, clip_norm_max


def train_dpgan(data: LabeledDataset, spec: GeneratorSpec) -> GeneratorModel:
    """Per-class GAN with the DP gradient mechanism on the discriminator.

    Per-example discriminator gradients are clipped to L2 norm <= clip;
    Gaussian noise with std sigma*clip is added once to the clipped sum
    (skipped entirely when sigma == 0, so a sigma=0 run is the plain
    clipped GAN, RNG stream included). The generator update is the
    ordinary cross-entropy GAN step, unnoised.
    """
    if spec.kind != "dpgan":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'dpgan'")
    parts = {}
    traces = {}
    for c in (0, 1):
        rows = data.features[data.labels == c]
        if rows.shape[0] == 0:
            continue
        model, trace, clip_trace = _train_dpgan_single(
            rows, spec, derive_seed(spec.seed, "class", c)
        )
        parts[c] = model
        traces[f"class{c}"] = trace
        traces[f"class{c}_max_clipped_norm"] = clip_trace
    return GeneratorModel(
        kind="dpgan",
        spec=spec,
        feature_names=data.feature_names,
        label_name=data.label_name,
        prior_p1=float((data.labels == 1).mean()),
        parts=parts,
        traces=traces,
    )


# --------------------------------------------------------------- CTGAN-lite


def train_ctgan(data: LabeledDataset, spec: GeneratorSpec) -> GeneratorModel:
    """Conditional GAN over feature columns plus the label column.

    Every training step samples, per batch element, a column uniformly
    among conditionable columns, a value from that column's
    log-frequency distribution, and a real row satisfying the condition.
    The generator loss adds a cross-entropy penalty binding the
    conditioned output column to the sampled value.
    """
    if spec.kind != "ctgan":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'ctgan'")
    matrix = np.column_stack([data.features, data.labels])
    n, n_cols = matrix.shape
    if n < spec.batch:
        raise ValueError(f"need at least batch={spec.batch} rows, got {n}")
    sampler = build_cond_sampler(matrix)
    cond_dim = 2 * n_cols
    rng = rng_from(spec.seed, "ctgan")
    gen = init_mlp(
        (spec.latent + cond_dim, spec.hidden, spec.hidden, n_cols),
        ("relu", "relu", "linear"),
        rng,
    )
    disc = init_mlp(
        (n_cols + cond_dim, spec.hidden, spec.hidden, 1),
        ("relu", "relu", "linear"),
        rng,
    )
    gen_state = AdamState.for_net(gen)
    disc_state = AdamState.for_net(disc)
    x_all = matrix.astype(np.float64)
    steps = max(1, n // spec.batch)
    b = spec.batch
    trace = []
    for epoch in range(spec.epochs):
        d_sum = g_sum = c_sum = 0.0
        for step in range(steps):
            cols, vals, rows = sampler.draw(rng, b)
            cvec = sampler.one_hot(cols, vals)
            noise = rng.standard_normal((b, spec.latent))
            fake_logits, _ = forward(gen, np.concatenate([noise, cvec], axis=1))
            fake = sigmoid(fake_logits)
            d_in = np.concatenate(
                [
                    np.concatenate([x_all[rows], cvec], axis=1),
                    np.concatenate([fake, cvec], axis=1),
                ]
            )
            targets = np.concatenate([np.ones((b, 1)), np.zeros((b, 1))])
            d_loss, d_grads, _ = mlp_backprop(disc, d_in, "gan_disc", targets)
            adam_step(disc, d_grads, disc_state, spec.lr)
            check_finite(disc, epoch, step)

            cols2, vals2, _ = sampler.draw(rng, b)
            cvec2 = sampler.one_hot(cols2, vals2)
            noise2 = rng.standard_normal((b, spec.latent))
            fake_logits2, gen_cache = forward(
                gen, np.concatenate([noise2, cvec2], axis=1)
            )
            fake2 = sigmoid(fake_logits2)
            g_loss, _, d_input_grad = mlp_backprop(
                disc, np.concatenate([fake2, cvec2], axis=1), "gan_gen"
            )
            dlogits = d_input_grad[:, :n_cols] * fake2 * (1.0 - fake2)
            rows_idx = np.arange(b)
            cond_logits = fake_logits2[rows_idx, cols2]
            cond_probs = fake2[rows_idx, cols2]
            softplus = np.maximum(cond_logits, 0) + np.log1p(np.exp(-np.abs(cond_logits)))
            c_loss = float((softplus - cond_logits * vals2).mean()) * spec.cond_weight
            dlogits[rows_idx, cols2] += (
                spec.cond_weight * (cond_probs - vals2) / b
            )
            gen_grads, _ = backward(gen, gen_cache, dlogits)
            adam_step(gen, gen_grads, gen_state, spec.lr)
            check_finite(gen, epoch, step)
            d_sum += d_loss
            g_sum += g_loss
            c_sum += c_loss
        trace.append(
            {
                "epoch": epoch,
                "disc_loss": d_sum / steps,
                "gen_loss": g_sum / steps,
                "cond_loss": c_sum / steps,
            }
        )
    model = CtganLiteModel(
        generator=gen,
        discriminator=disc,
        latent=spec.latent,
        n_columns=n_cols,
        label_column=n_cols - 1,
        sampler=sampler,
    )
    return GeneratorModel(
        kind="ctgan",
        spec=spec,
        feature_names=data.feature_names,
        label_name=data.label_name,
        prior_p1=float((data.labels == 1).mean()),
        parts={"model": model},
        traces={"ctgan": trace},
    )


# ------------------------------------------------------------------ dispatch


def train_generator(data: LabeledDataset, spec: GeneratorSpec) -> GeneratorModel:
    if spec.kind in ("bernoulli", "noisy_copy"):
        return train_baseline(data, spec.kind, spec)
    if spec.kind == "vae":
        return train_vae(data, spec)
    if spec.kind == "dpgan":
        return train_dpgan(data, spec)
    if spec.kind == "ctgan":
        return train_ctgan(data, spec)
    raise ValueError(f"kind {spec.kind!r} is not trainable (resolved by the harness)")


# ------------------------------------------------------------------ sampling


def _bernoulli_bits(probs: np.ndarray, rng, threshold: bool) -> np.ndarray:
    if threshold:
        return (probs >= 0.5).astype(np.uint8)
    return (rng.random(probs.shape) < probs).astype(np.uint8)


def _vae_probs(model: VaeModel, n: int, rng) -> np.ndarray:
    latent = rng.standard_normal((n, model.latent))
    logits, _ = forward(model.decoder, latent)
    return sigmoid(logits)


def _gan_probs(model: DpGanModel, n: int, rng, latent: int) -> np.ndarray:
    noise = rng.standard_normal((n, latent))
    logits, _ = forward(model.generator, noise)
    return sigmoid(logits)


def sample(model: GeneratorModel, n: int, seed: int,
           label_mode: str = "conditional", threshold: bool = False) -> LabeledDataset:
    """Draw n rows from a trained generator as a LabeledDataset.

    label_mode "conditional" draws each row's class from the training
    prior and generates class-conditionally (CTGAN-lite conditions on
    the label column and emits the conditioned value as the label);
    "unconditional" lets CTGAN-lite condition on a random column and
    report its generated label bit. threshold=True switches the
    probability-to-bit conversion from Bernoulli draw to 0.5 rounding
    (ablation only).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if label_mode not in ("conditional", "unconditional"):
        raise ValueError(f"unknown label_mode {label_mode!r}")
    rng = rng_from(seed, "sample", model.kind)
    d = model.feature_count

    if model.kind == "noisy_copy":
        feats = model.parts["features"]
        labels = model.parts["labels"]
        rho = model.parts["flip_prob"]
        idx = rng.integers(0, feats.shape[0], size=n)
        rows = feats[idx].copy()
        if rho > 0:
            flips = rng.random((n, d)) < rho
            rows ^= flips.astype(np.uint8)
        return LabeledDataset(rows, labels[idx], model.feature_names, model.label_name)

    if model.kind == "ctgan":
        ct: CtganLiteModel = model.parts["model"]
        sampler = ct.sampler
        if label_mode == "conditional":
            vals = (rng.random(n) < model.prior_p1).astype(np.int64)
            cols = np.full(n, ct.label_column, dtype=np.int64)
        else:
            cols = sampler.cond_columns[rng.integers(0, sampler.cond_columns.size, n)]
            vals = (rng.random(n) < sampler.raw_probs[cols, 1]).astype(np.int64)
        cvec = sampler.one_hot(cols, vals)
        noise = rng.standard_normal((n, ct.latent))
        logits, _ = forward(ct.generator, np.concatenate([noise, cvec], axis=1))
        bits = _bernoulli_bits(sigmoid(logits), rng, threshold)
        if label_mode == "conditional":
            labels = vals.astype(np.uint8)
        else:
            labels = bits[:, ct.label_column]
        return LabeledDataset(
            bits[:, :d], labels, model.feature_names, model.label_name
        )

    # per-class kinds: bernoulli, vae, dpgan
    labels = (rng.random(n) < model.prior_p1).astype(np.uint8)
    rows = np.empty((n, d), dtype=np.uint8)
    for c in (0, 1):
        idx = np.flatnonzero(labels == c)
        if idx.size == 0:
            continue
        if model.kind == "bernoulli":
            probs = np.broadcast_to(model.parts[c], (idx.size, d))
        elif model.kind == "vae":
            probs = _vae_probs(model.parts[c], idx.size, rng)
        elif model.kind == "dpgan":
            probs = _gan_probs(model.parts[c], idx.size, rng, model.spec.latent)
        else:
            raise ValueError(f"cannot sample from kind {model.kind!r}")
        rows[idx] = _bernoulli_bits(probs, rng, threshold)
    return LabeledDataset(rows, labels, model.feature_names, model.label_name)


def condition_satisfaction_rate(model: GeneratorModel, n: int, seed: int) -> float:
    """Fraction of CTGAN-lite draws whose conditioned bit matches the condition.

    Conditions are drawn exactly as in training (uniform column,
    log-frequency value); bits by Bernoulli draw.
    """
    if model.kind != "ctgan":
        raise ValueError("condition satisfaction applies to ctgan models only")
    ct: CtganLiteModel = model.parts["model"]
    rng = rng_from(seed, "cond-check")
    cols, vals, _ = ct.sampler.draw(rng, n)
    cvec = ct.sampler.one_hot(cols, vals)
    noise = rng.standard_normal((n, ct.latent))
    logits, _ = forward(ct.generator, np.concatenate([noise, cvec], axis=1))
    bits = _bernoulli_bits(sigmoid(logits), rng, threshold=False)
    return float((bits[np.arange(n), cols] == vals).mean())


def trace_rows(model: GeneratorModel) -> list[dict]:
    """Flatten a model's loss traces into CSV-ready dicts."""
    out = []
    for name, trace in model.traces.items():
        if name.endswith("_max_clipped_norm"):
            for step, value in enumerate(trace):
                out.append({"trace": name, "step": step, "value": value})
        else:
            for entry in trace:
                out.append({"trace": name, **entry})
    return out


# --------------------------------------------------------------- grid search


def grid_search(data: LabeledDataset, grid: list[GeneratorSpec], k_sim: int = 5,
                seed: int = 0, n_pool: int | None = None):
    """Train every spec, score a matched synthetic sample, rank by metric sum.

    The matched sample is drawn without a uniqueness filter (a copying
    generator legitimately maximises the objective; uniqueness is a
    separate report). Ties keep grid order. Returns (best_spec,
    leaderboard) where the leaderboard lists every spec with its
    similarity report or failure reason, sorted best first.
    """
    if not grid:
        raise ValueError("empty grid")
    if n_pool is None:
        n_pool = max(2000, 4 * data.row_count)
    entries = []
    for i, spec in enumerate(grid):
        entry = {"index": i, "kind": spec.kind, "spec": spec.to_dict(),
                 "similarity": None, "error": None}
        try:
            model = train_generator(data, spec)
            pool = sample(model, n_pool, derive_seed(seed, "grid-pool", i))
            matched = sample_matched(pool, data, derive_seed(seed, "grid-draw", i))
            report = similarity_report(data.features, matched.features, k_sim)
            entry["similarity"] = report.to_dict()
        except (ValueError, PoolShortfallError, TrainingDivergedError) as exc:
            entry["error"] = str(exc)
        entries.append(entry)
    ok = [e for e in entries if e["similarity"] is not None]
    failed = [e for e in entries if e["similarity"] is None]
    if not ok:
        reasons = "; ".join(f"#{e['index']}: {e['error']}" for e in failed)
        raise RuntimeError(f"all specs failed to train: {reasons}")
    ok.sort(key=lambda e: -e["similarity"]["sum"])
    leaderboard = ok + failed
    for rank, entry in enumerate(leaderboard):
        entry["rank"] = rank
    best = grid[ok[0]["index"]]
    return best, leaderboard
