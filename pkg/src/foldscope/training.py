"""Training small classifiers with an optional fold-flattening penalty.

The classifier part is plain minibatch SGD on softmax cross-entropy.  The
penalty replaces the hard activation pattern with a temperature-controlled
logistic of the pre-activations, which makes the folding value of a probe
segment differentiable; the penalty lambda / (phi + 1)^2 then rewards nets
whose estimated global folding is large, i.e. pushes folds apart only when
that is cheap and otherwise flattens.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, TextIO

import numpy as np
from scipy.special import expit, logsumexp

from .globalfold import LabeledDataset
from .network import (
    ActivationKind,
    Layer,
    Mlp,
    activation_derivative,
    apply_activation,
)

TASKS = ("two_gaussians", "xor_quadrants", "concentric_rings")

PENALTY_PROBE_POINTS = 9  # equidistant interior sampling of each probe segment
PENALTY_R2_FLOOR = 0.5  # soft traveled distance below this counts as flat


class TrainingDivergedError(RuntimeError):
    """Loss or parameters became non-finite during training."""


@dataclass
class PenaltyConfig:
    lam: float  # weight; 0 disables the penalty entirely
    beta: float = 10.0  # sharpness of the smooth max
    tau: float = 0.1  # logistic temperature for soft patterns
    every_n_epochs: int = 10
    phi_budget: int = 16  # inter-class probe pairs per penalty step

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("penalty weight must be non-negative")
        if self.beta <= 0 or self.tau <= 0:
            raise ValueError("beta and tau must be positive")
        if self.every_n_epochs < 1 or self.phi_budget < 1:
            raise ValueError("every_n_epochs and phi_budget must be at least 1")


@dataclass
class DatasetSpec:
    task: str
    n: int = 200
    noise: float = 0.1


@dataclass
class TrainConfig:
    layer_widths: list[int]
    dataset: DatasetSpec
    activation: ActivationKind = ActivationKind.RELU
    epochs: int = 200
    lr: float = 0.5
    batch_size: int = 32
    seed: int = 0
    penalty: Optional[PenaltyConfig] = None


@dataclass
class TrainHistory:
    """Per-epoch curves; phi/penalty stay None on epochs without a penalty step."""

    loss: list[float] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)
    phi: list[Optional[float]] = field(default_factory=list)
    penalty: list[Optional[float]] = field(default_factory=list)

    def to_csv(self, dest: TextIO) -> None:
        dest.write("epoch,loss,accuracy,phi,penalty\n")
        for e, (l, a, p, q) in enumerate(
            zip(self.loss, self.accuracy, self.phi, self.penalty), start=1
        ):
            cells = [str(e), repr(l), repr(a)]
            cells.append("" if p is None else repr(p))
            cells.append("" if q is None else repr(q))
            dest.write(",".join(cells) + "\n")


def make_dataset(task: str, n: int = 200, noise: float = 0.1, seed: int = 0) -> LabeledDataset:
    """Balanced 2-class synthetic set in [-1, 1]^2, deterministic for a seed.

    two_gaussians: blobs at +-(0.5, 0.5).  xor_quadrants: blobs at the four
    quadrant centers labeled by sign(x*y) < 0.  concentric_rings: an inner
    ring (class 0) inside an outer ring (class 1).
    """
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; expected one of {', '.join(TASKS)}")
    if n < 4:
        raise ValueError("need at least 4 samples")
    if noise < 0:
        raise ValueError("noise must be non-negative")
    rng = np.random.default_rng(seed)
    idx = np.arange(n)
    if task == "two_gaussians":
        labels = idx % 2
        centers = np.where(labels[:, None] == 0, 0.5, -0.5) * np.ones((n, 2))
        points = centers + noise * rng.standard_normal((n, 2))
    elif task == "xor_quadrants":
        corners = np.array([[0.5, 0.5], [-0.5, -0.5], [0.5, -0.5], [-0.5, 0.5]])
        which = idx % 4
        labels = (which >= 2).astype(np.int64)  # same-sign quadrants are class 0
        points = corners[which] + noise * rng.standard_normal((n, 2))
    else:  # concentric_rings
        labels = idx % 2
        radius = np.where(labels == 0, 0.35, 0.8) + noise * rng.standard_normal(n)
        angle = rng.uniform(0.0, 2.0 * math.pi, size=n)
        points = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    return LabeledDataset(np.clip(points, -1.0, 1.0), labels)


def init_network(
    layer_widths: Sequence[int],
    activation: ActivationKind = ActivationKind.RELU,
    seed: int = 0,
) -> Mlp:
    """He-scaled random weights, zero biases, identity output layer."""
    widths = [int(w) for w in layer_widths]
    if len(widths) < 2 or any(w < 1 for w in widths):
        raise ValueError("layer_widths needs at least input and output sizes, all positive")
    rng = np.random.default_rng(seed)
    layers = []
    for k in range(len(widths) - 1):
        fan_in, fan_out = widths[k], widths[k + 1]
        weights = rng.standard_normal((fan_out, fan_in)) * math.sqrt(2.0 / fan_in)
        last = k == len(widths) - 2
        layers.append(
            Layer(
                weights=weights,
                bias=np.zeros(fan_out),
                activation=ActivationKind.IDENTITY if last else activation,
                is_output=last,
            )
        )
    return Mlp(layers=tuple(layers), input_dim=widths[0])


def _hidden_preactivations(net: Mlp, x: np.ndarray) -> list[np.ndarray]:
    h = np.asarray(x, dtype=np.float64)
    zs = []
    for layer in net.layers:
        z = layer.weights @ h + layer.bias
        if layer.is_output:
            break
        zs.append(z)
        h = apply_activation(layer.activation, z)
    return zs


def soft_pattern(net: Mlp, x: np.ndarray, tau: float) -> np.ndarray:
    """Relaxed activation pattern: logistic(z / tau) per hidden unit, in (0, 1).

    Built on pre-activations so the hard pattern (z > 0) is recovered as
    tau -> 0 for every supported activation, including those that zero out
    or squash the post-activation value.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    zs = _hidden_preactivations(net, x)
    if not zs:
        return np.zeros(0)
    return expit(np.concatenate(zs) / tau)


def soft_hamming(p: np.ndarray, q: np.ndarray) -> float:
    """L1 distance between soft patterns; equals the bit count in the hard limit."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("soft patterns must have the same length")
    return float(np.sum(np.abs(p - q)))


def penalty_term(phi: float, lam: float) -> float:
    return lam / (phi + 1.0) ** 2


def _zero_grads(Ws, bs):
    return [(np.zeros_like(W), np.zeros_like(b)) for W, b in zip(Ws, bs)]


def _segment_soft_chi_grad(Ws, bs, kinds, a, b, cfg: PenaltyConfig):
    """Soft folding value of the segment a->b and its parameter gradient.

    Returns (chi_value, grads) or None when the segment is flat (soft
    traveled distance under the floor), in which case it still counts as a
    zero term but moves nothing.
    """
    m = PENALTY_PROBE_POINTS
    ts = np.linspace(0.0, 1.0, m)
    points = a[None, :] + ts[:, None] * (b - a)[None, :]

    # forward pass for all probe points at once, keeping hidden caches
    hs = [points]  # hs[k] feeds hidden layer k
    zs = []
    h = points
    for W, b_, kind in zip(Ws[:-1], bs[:-1], kinds[:-1]):
        z = h @ W.T + b_
        zs.append(z)
        h = apply_activation(kind, z)
        hs.append(h)
    if not zs:
        return None  # no hidden units: every soft pattern is empty
    s = [expit(np.concatenate([z[i] for z in zs]) / cfg.tau) for i in range(m)]

    d = np.array([np.sum(np.abs(s[i] - s[0])) for i in range(m)])
    steps = [s[i + 1] - s[i] for i in range(m - 1)]
    r2s = float(sum(np.sum(np.abs(st)) for st in steps))
    if r2s < PENALTY_R2_FLOOR:
        return None
    r1s = float(logsumexp(cfg.beta * d)) / cfg.beta
    chi_s = 1.0 - r1s / r2s

    # d chi / d s_i, assembled from the smooth max over d and the step sums
    w = np.exp(cfg.beta * d - cfg.beta * d.max())
    w /= w.sum()  # dr1s/dd_i
    gs = [np.zeros_like(s[0]) for _ in range(m)]
    for i in range(1, m):
        sign_i = np.sign(s[i] - s[0])
        gs[i] += (-1.0 / r2s) * w[i] * sign_i
        gs[0] += (-1.0 / r2s) * w[i] * (-sign_i)
    for i in range(m - 1):
        sign_step = np.sign(steps[i])
        coeff = r1s / (r2s * r2s)  # dchi/dr2s
        gs[i + 1] += coeff * sign_step
        gs[i] += coeff * (-sign_step)

    # backprop each probe point through the hidden stack; output layer is
    # not on the pattern path so its gradient stays zero
    grads = _zero_grads(Ws, bs)
    n_hidden = len(zs)
    offsets = np.cumsum([0] + [z.shape[1] for z in zs])
    for i in range(m):
        gz_next = None
        for k in range(n_hidden - 1, -1, -1):
            z = zs[k][i]
            sk = expit(z / cfg.tau)
            gz = gs[i][offsets[k] : offsets[k + 1]] * sk * (1.0 - sk) / cfg.tau
            if gz_next is not None:
                gz = gz + (Ws[k + 1].T @ gz_next) * activation_derivative(kinds[k], z)
            grads[k][0][...] += np.outer(gz, hs[k][i])
            grads[k][1][...] += gz
            gz_next = gz
    return chi_s, grads


def _penalty_terms(Ws, bs, kinds, probe_pairs, cfg: PenaltyConfig):
    """(phi_tilde, penalty_value, grads) for the current parameters."""
    if cfg.lam == 0:
        return 0.0, 0.0, _zero_grads(Ws, bs)
    phi_grads = _zero_grads(Ws, bs)
    chi_sum = 0.0
    n_terms = 0
    for a, b in probe_pairs:
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if np.array_equal(a, b):
            warnings.warn("skipping probe pair with identical endpoints")
            continue
        n_terms += 1
        seg = _segment_soft_chi_grad(Ws, bs, kinds, a, b, cfg)
        if seg is None:
            continue  # flat segment: zero term, zero gradient
        chi_s, grads = seg
        chi_sum += chi_s
        for (gW, gb), (sW, sb) in zip(phi_grads, grads):
            gW += sW
            gb += sb
    if n_terms == 0:
        return 0.0, penalty_term(0.0, cfg.lam), _zero_grads(Ws, bs)
    phi = chi_sum / n_terms
    value = penalty_term(phi, cfg.lam)
    scale = -2.0 * cfg.lam / (phi + 1.0) ** 3 / n_terms  # dP/dphi spread over terms
    grads = [(scale * gW, scale * gb) for gW, gb in phi_grads]
    return phi, value, grads


def penalty_value_and_grad(net: Mlp, probe_pairs, cfg: PenaltyConfig):
    """Penalty lambda / (phi_tilde + 1)^2 and its gradient per layer.

    phi_tilde averages the soft folding value over the probe segments.
    Returns (value, [(dW, db), ...]) aligned with net.layers.
    """
    Ws = [layer.weights for layer in net.layers]
    bs = [layer.bias for layer in net.layers]
    kinds = [layer.activation for layer in net.layers]
    _, value, grads = _penalty_terms(Ws, bs, kinds, probe_pairs, cfg)
    return value, grads


def _draw_probe_pairs(data: LabeledDataset, budget: int, rng: np.random.Generator):
    """Seeded inter-class sample pairs; rejection keeps the draw order stable."""
    n = len(data.labels)
    pairs = []
    attempts = 0
    while len(pairs) < budget and attempts < 1000 * budget:
        i = int(rng.integers(n))
        j = int(rng.integers(n))
        attempts += 1
        if data.labels[i] != data.labels[j]:
            pairs.append((data.inputs[i], data.inputs[j]))
    return pairs


def _child_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(stream)]).generate_state(1)[0])


def train(config: TrainConfig) -> tuple[Mlp, TrainHistory]:
    """Minibatch SGD on softmax cross-entropy, penalty step every n-th epoch.

    Deterministic for a fixed config: the dataset reuses config.seed (so it
    can be regenerated standalone), while init, shuffling and probe draws
    use seeds derived from it.  With lam = 0 the penalty machinery is never
    touched, so histories match a no-penalty run exactly.
    """
    spec = config.dataset
    data = make_dataset(spec.task, spec.n, spec.noise, config.seed)
    n_classes = data.n_classes
    widths = [int(w) for w in config.layer_widths]
    if widths[0] != data.inputs.shape[1]:
        raise ValueError(f"first layer width must be {data.inputs.shape[1]} for task {spec.task!r}")
    if widths[-1] != n_classes:
        raise ValueError(f"last layer width must be {n_classes} for task {spec.task!r}")
    if config.epochs < 1 or config.lr <= 0 or config.batch_size < 1:
        raise ValueError("epochs, lr and batch_size must be positive")

    net0 = init_network(widths, config.activation, _child_seed(config.seed, 1))
    Ws = [layer.weights.copy() for layer in net0.layers]
    bs = [layer.bias.copy() for layer in net0.layers]
    kinds = [layer.activation for layer in net0.layers]
    shuffle_rng = np.random.default_rng(_child_seed(config.seed, 2))

    pen = config.penalty if (config.penalty and config.penalty.lam > 0) else None
    probe_rng = np.random.default_rng(_child_seed(config.seed, 3)) if pen else None

    X, y = data.inputs, data.labels
    n = len(y)
    onehot = np.eye(n_classes)[y]
    history = TrainHistory()

    def forward_batch(xb):
        hs, zs = [xb], []
        h = xb
        for W, b, kind in zip(Ws, bs, kinds):
            z = h @ W.T + b
            zs.append(z)
            h = apply_activation(kind, z)
            hs.append(h)
        return zs, hs

    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(n)
        batch_losses = []
        for start in range(0, n, config.batch_size):
            take = order[start : start + config.batch_size]
            xb, yb = X[take], onehot[take]
            # overflow here is reported as divergence, not a numpy warning
            with np.errstate(over="ignore", invalid="ignore"):
                zs, hs = forward_batch(xb)
                logits = zs[-1]  # output layer is identity
                shifted = logits - logits.max(axis=1, keepdims=True)
                log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
                loss = float(-(yb * log_probs).mean(axis=0).sum())
                if not math.isfinite(loss):
                    raise TrainingDivergedError(f"loss became non-finite at epoch {epoch}")
                batch_losses.append(loss)

                delta = (np.exp(log_probs) - yb) / len(take)
                for k in range(len(Ws) - 1, -1, -1):
                    gW = delta.T @ hs[k]
                    gb = delta.sum(axis=0)
                    if k > 0:
                        delta = (delta @ Ws[k]) * activation_derivative(kinds[k - 1], zs[k - 1])
                    Ws[k] -= config.lr * gW
                    bs[k] -= config.lr * gb

        zs, _ = forward_batch(X)
        accuracy = float((zs[-1].argmax(axis=1) == y).mean())
        phi_e = pen_e = None
        if pen and epoch % pen.every_n_epochs == 0:
            probes = _draw_probe_pairs(data, pen.phi_budget, probe_rng)
            phi_e, pen_e, grads = _penalty_terms(Ws, bs, kinds, probes, pen)
            for (gW, gb), W, b in zip(grads, Ws, bs):
                W -= config.lr * gW
                b -= config.lr * gb
            if not all(np.isfinite(W).all() and np.isfinite(b).all() for W, b in zip(Ws, bs)):
                raise TrainingDivergedError(f"parameters became non-finite at epoch {epoch}")
        history.loss.append(float(np.mean(batch_losses)))
        history.accuracy.append(accuracy)
        history.phi.append(phi_e)
        history.penalty.append(pen_e)

    layers = tuple(
        Layer(weights=W, bias=b, activation=kind, is_output=(k == len(Ws) - 1))
        for k, (W, b, kind) in enumerate(zip(Ws, bs, kinds))
    )
    return Mlp(layers=layers, input_dim=widths[0]), history


def read_key_values(source) -> dict[str, str]:
    """Parse `key = value` lines; '#' starts a comment, blank lines ignored."""
    close = False
    if not hasattr(source, "read"):
        source = open(source, "r")
        close = True
    try:
        text = source.read()
    finally:
        if close:
            source.close()
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ValueError(f"config line {lineno}: empty key or value")
        if key in out:
            raise ValueError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


_CONFIG_KEYS = {
    "task",
    "n",
    "noise",
    "widths",
    "activation",
    "epochs",
    "lr",
    "batch_size",
    "seed",
    "lambda",
    "beta",
    "tau",
    "every_n_epochs",
    "phi_budget",
}


def train_config_from_mapping(kv: dict[str, str], extra_keys: frozenset = frozenset()) -> TrainConfig:
    """Build a TrainConfig from string key/values (e.g. a parsed config file).

    Penalty settings take effect only when `lambda` is present.  Keys in
    extra_keys are left for the caller; anything else unknown is an error.
    """
    unknown = set(kv) - _CONFIG_KEYS - set(extra_keys)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in ("task", "widths"):
        if key not in kv:
            raise ValueError(f"config is missing required key {key!r}")
    try:
        widths = [int(w) for w in kv["widths"].split(",")]
        spec = DatasetSpec(
            task=kv["task"],
            n=int(kv.get("n", "200")),
            noise=float(kv.get("noise", "0.1")),
        )
        penalty = None
        if "lambda" in kv:
            penalty = PenaltyConfig(
                lam=float(kv["lambda"]),
                beta=float(kv.get("beta", "10.0")),
                tau=float(kv.get("tau", "0.1")),
                every_n_epochs=int(kv.get("every_n_epochs", "10")),
                phi_budget=int(kv.get("phi_budget", "16")),
            )
        return TrainConfig(
            layer_widths=widths,
            dataset=spec,
            activation=ActivationKind(kv.get("activation", "relu")),
            epochs=int(kv.get("epochs", "200")),
            lr=float(kv.get("lr", "0.5")),
            batch_size=int(kv.get("batch_size", "32")),
            seed=int(kv.get("seed", "0")),
            penalty=penalty,
        )
    except ValueError as exc:
        raise ValueError(f"bad config value: {exc}") from exc
