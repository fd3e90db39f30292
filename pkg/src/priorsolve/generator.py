"""Feedforward generator networks and their first-order geometry.

A generator G maps a low-dimensional latent vector z (inside a Euclidean
ball) to an output vector of higher dimension through a stack of affine
layers with elementwise activations.  Besides evaluation, this module
provides the dense Jacobian, vector-Jacobian products for reverse-mode
gradients, sampled estimates of the near-isometry constants

    iota * ||z' - z|| <= ||G(z') - G(z)|| <= kappa * ||z' - z||

and of the strong-smoothness constant nu bounding the linearization
remainder ||G(z') - G(z) - DG(z)(z' - z)|| <= (nu / 2) * ||z' - z||^2,
plus seeded weight perturbation and a JSON description format.
"""

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Activation",
    "Layer",
    "FeedforwardGenerator",
    "GeometryEstimate",
    "estimate_geometry",
    "perturb_weights",
    "save_generator",
    "load_generator",
]

ACTIVATION_KINDS = ("identity", "elu", "softplus", "tanh", "sigmoid")

# relative threshold on the smallest singular value of each weight matrix
RANK_TOL = 1e-10

# pairs closer than this are redrawn when sampling difference quotients
DEGENERATE_PAIR_TOL = 1e-12


def _sigmoid(x):
    # tanh form is overflow-free on both tails
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass(frozen=True)
class Activation:
    """Elementwise activation.  ELU with elu_alpha != 1 loses C1 smoothness
    at the origin and is therefore flagged with a warning."""

    kind: str
    elu_alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in ACTIVATION_KINDS:
            raise ValueError(
                f"unknown activation {self.kind!r}; expected one of {ACTIVATION_KINDS}"
            )
        if self.kind == "elu":
            if self.elu_alpha <= 0.0:
                raise ValueError("elu_alpha must be positive")
            if self.elu_alpha != 1.0:
                warnings.warn(
                    "ELU with elu_alpha != 1 is only piecewise C1", stacklevel=2
                )

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            return x.copy()
        if self.kind == "elu":
            return np.where(x > 0.0, x, self.elu_alpha * np.expm1(np.minimum(x, 0.0)))
        if self.kind == "softplus":
            return np.logaddexp(0.0, x)
        if self.kind == "tanh":
            return np.tanh(x)
        return _sigmoid(x)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            return np.ones_like(x)
        if self.kind == "elu":
            return np.where(x > 0.0, 1.0, self.elu_alpha * np.exp(np.minimum(x, 0.0)))
        if self.kind == "softplus":
            return _sigmoid(x)
        if self.kind == "tanh":
            return 1.0 - np.tanh(x) ** 2
        s = _sigmoid(x)
        return s * (1.0 - s)


@dataclass(frozen=True, eq=False)
class Layer:
    """One affine layer x -> act(W x + b)."""

    weight: np.ndarray
    bias: np.ndarray
    activation: Activation

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=float)
        b = np.asarray(self.bias, dtype=float)
        if w.ndim != 2:
            raise ValueError("layer weight must be a matrix")
        if b.shape != (w.shape[0],):
            raise ValueError(
                f"bias shape {b.shape} does not match weight rows {w.shape[0]}"
            )
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)


class FeedforwardGenerator:
    """Stack of affine-plus-activation layers with non-decreasing widths.

    Parameters
    ----------
    layers : sequence of Layer
        Applied in order.  Widths must be non-decreasing so that every
        weight matrix can have full column rank.
    domain_radius : float
        Radius of the Euclidean ball the latent input is assumed to live in.
        Geometry estimates sample from this ball.
    rank_check : bool
        When True (default), reject any weight matrix whose smallest
        singular value is at most RANK_TOL times its largest.
    """

    def __init__(self, layers, domain_radius, rank_check=True):
        layers = tuple(layers)
        if not layers:
            raise ValueError("generator needs at least one layer")
        if not (np.isfinite(domain_radius) and domain_radius > 0.0):
            raise ValueError("domain_radius must be positive and finite")
        for i, layer in enumerate(layers):
            rows, cols = layer.weight.shape
            if rows < cols:
                raise ValueError(
                    f"layer {i} shrinks width {cols} -> {rows}; widths must be "
                    "non-decreasing"
                )
            if i > 0 and cols != layers[i - 1].weight.shape[0]:
                raise ValueError(
                    f"layer {i} expects input width {cols} but layer {i - 1} "
                    f"produces {layers[i - 1].weight.shape[0]}"
                )
            if rank_check:
                s = np.linalg.svd(layer.weight, compute_uv=False)
                if s[-1] <= RANK_TOL * s[0]:
                    raise ValueError(
                        f"layer {i} weight is rank deficient "
                        f"(sigma_min/sigma_max = {s[-1] / max(s[0], 1e-300):.3e})"
                    )
        self.layers = layers
        self.domain_radius = float(domain_radius)

    @property
    def input_dim(self):
        return self.layers[0].weight.shape[1]

    @property
    def output_dim(self):
        return self.layers[-1].weight.shape[0]

    @property
    def layer_sizes(self):
        return (self.input_dim,) + tuple(l.weight.shape[0] for l in self.layers)

    def _forward_trace(self, z):
        """Output together with the per-layer pre-activations."""
        x = np.asarray(z, dtype=float)
        if x.shape != (self.input_dim,):
            raise ValueError(f"expected input of shape ({self.input_dim},)")
        preacts = []
        for layer in self.layers:
            a = layer.weight @ x + layer.bias
            preacts.append(a)
            x = layer.activation.value(a)
        return x, preacts

    def forward(self, z):
        """Evaluate G(z)."""
        return self._forward_trace(z)[0]

    def jacobian(self, z):
        """Dense Jacobian DG(z), shape (output_dim, input_dim)."""
        _, preacts = self._forward_trace(z)
        jac = None
        for layer, a in zip(self.layers, preacts):
            step = layer.activation.derivative(a)[:, None] * layer.weight
            jac = step if jac is None else step @ jac
        return jac

    def vjp(self, z, u):
        """Vector-Jacobian product DG(z)^T u in one forward and one backward pass."""
        u = np.asarray(u, dtype=float)
        if u.shape != (self.output_dim,):
            raise ValueError(f"expected cotangent of shape ({self.output_dim},)")
        _, preacts = self._forward_trace(z)
        v = u
        for layer, a in zip(reversed(self.layers), reversed(preacts)):
            v = layer.weight.T @ (layer.activation.derivative(a) * v)
        return v


@dataclass(frozen=True)
class GeometryEstimate:
    """Sampled geometric constants of a generator over its domain ball.

    iota_hat / kappa_hat are the extreme observed difference quotients
    ||G(z') - G(z)|| / ||z' - z||; nu_g_hat is the largest observed
    2 ||remainder|| / ||z' - z||^2.  All are sample extremes, not certified
    bounds: iota_hat can only shrink and kappa_hat / nu_g_hat can only grow
    as more pairs are added to the same stream.
    """

    iota_hat: float
    kappa_hat: float
    nu_g_hat: float
    n_pairs: int
    seed: int
    domain_radius: float


def _ball_point(rng, dim, radius):
    g = rng.standard_normal(dim)
    norm = np.linalg.norm(g)
    while norm < 1e-30:
        g = rng.standard_normal(dim)
        norm = np.linalg.norm(g)
    return radius * (rng.uniform() ** (1.0 / dim)) * (g / norm)


def estimate_geometry(gen, n_pairs, seed):
    """Estimate (iota, kappa, nu) from seeded pairs in the domain ball.

    Pairs are drawn sequentially from one generator stream, so estimates
    with a larger n_pairs and the same seed extend the smaller sample and
    are monotone in it.  Degenerate pairs (distance below 1e-12) are
    redrawn.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    rng = np.random.default_rng(seed)
    dim = gen.input_dim
    radius = gen.domain_radius
    iota = np.inf
    kappa = 0.0
    nu = 0.0
    for _ in range(n_pairs):
        while True:
            z1 = _ball_point(rng, dim, radius)
            z2 = _ball_point(rng, dim, radius)
            dist = float(np.linalg.norm(z2 - z1))
            if dist >= DEGENERATE_PAIR_TOL:
                break
        g1 = gen.forward(z1)
        g2 = gen.forward(z2)
        ratio = float(np.linalg.norm(g2 - g1)) / dist
        iota = min(iota, ratio)
        kappa = max(kappa, ratio)
        rem = g2 - g1 - gen.jacobian(z1) @ (z2 - z1)
        nu = max(nu, 2.0 * float(np.linalg.norm(rem)) / dist**2)
    return GeometryEstimate(
        iota_hat=iota,
        kappa_hat=kappa,
        nu_g_hat=nu,
        n_pairs=n_pairs,
        seed=seed,
        domain_radius=radius,
    )


def perturb_weights(gen, magnitude, seed):
    """Fresh generator with i.i.d. uniform(-magnitude, magnitude) noise added
    to every weight entry.  Biases and the original generator are untouched.
    The result skips the rank check so that perturbation can be used to
    repair a deliberately degenerate generator."""
    if magnitude <= 0.0:
        raise ValueError("magnitude must be positive")
    rng = np.random.default_rng(seed)
    layers = []
    for layer in gen.layers:
        noise = rng.uniform(-magnitude, magnitude, size=layer.weight.shape)
        layers.append(Layer(layer.weight + noise, layer.bias.copy(), layer.activation))
    return FeedforwardGenerator(layers, gen.domain_radius, rank_check=False)


# ---------------------------------------------------------------------------
# JSON description files


def _layer_to_dict(layer):
    out = {"activation": layer.activation.kind}
    if layer.activation.kind == "elu":
        out["elu_alpha"] = layer.activation.elu_alpha
    out["weights"] = layer.weight.tolist()
    out["bias_values"] = layer.bias.tolist()
    return out


def save_generator(gen, path):
    """Write an explicit (lossless) JSON description of the generator."""
    doc = {
        "schema": 1,
        "input_dim": gen.input_dim,
        "domain_radius": gen.domain_radius,
        "layers": [_layer_to_dict(l) for l in gen.layers],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _check_keys(doc, allowed, where):
    extra = set(doc) - set(allowed)
    if extra:
        raise ValueError(f"unknown key(s) {sorted(extra)} in {where}")


def _materialize_layer(doc, index):
    _check_keys(
        doc,
        ("activation", "elu_alpha", "bias", "init", "weights", "bias_values"),
        f"layer {index}",
    )
    if "activation" not in doc:
        raise ValueError(f"layer {index} is missing 'activation'")
    act = Activation(doc["activation"], elu_alpha=doc.get("elu_alpha", 1.0))
    if ("init" in doc) == ("weights" in doc):
        raise ValueError(f"layer {index} needs exactly one of 'init' or 'weights'")
    if "weights" in doc:
        w = np.asarray(doc["weights"], dtype=float)
        b = np.asarray(doc.get("bias_values", np.zeros(w.shape[0])), dtype=float)
        return Layer(w, b, act)
    init = doc["init"]
    _check_keys(init, ("kind", "rows", "cols", "seed", "scale"), f"layer {index} init")
    for key in ("kind", "rows", "cols", "seed"):
        if key not in init:
            raise ValueError(f"layer {index} init is missing {key!r}")
    rows, cols = int(init["rows"]), int(init["cols"])
    scale = float(init.get("scale", 1.0))
    rng = np.random.default_rng(int(init["seed"]))
    if init["kind"] == "uniform":
        w = rng.uniform(-scale, scale, size=(rows, cols)) / math.sqrt(cols)
    elif init["kind"] == "orthonormal":
        if rows < cols:
            raise ValueError(f"layer {index}: orthonormal init needs rows >= cols")
        q, r = np.linalg.qr(rng.standard_normal((rows, cols)))
        w = scale * (q * np.sign(np.diag(r)))
    else:
        raise ValueError(f"layer {index}: unknown init kind {init['kind']!r}")
    use_bias = doc.get("bias", True)
    if not isinstance(use_bias, bool):
        raise ValueError(f"layer {index}: 'bias' must be a boolean")
    b = rng.uniform(-scale, scale, size=rows) if use_bias else np.zeros(rows)
    return Layer(w, b, act)


def load_generator(path):
    """Load a generator from its JSON description (explicit or seeded init)."""
    with open(path) as fh:
        doc = json.load(fh)
    _check_keys(doc, ("schema", "input_dim", "domain_radius", "layers"), "generator file")
    for key in ("schema", "input_dim", "domain_radius", "layers"):
        if key not in doc:
            raise ValueError(f"generator file is missing {key!r}")
    if doc["schema"] != 1:
        raise ValueError(f"unsupported generator schema {doc['schema']!r}")
    layers = [_materialize_layer(d, i) for i, d in enumerate(doc["layers"])]
    gen = FeedforwardGenerator(layers, float(doc["domain_radius"]))
    if gen.input_dim != int(doc["input_dim"]):
        raise ValueError(
            f"declared input_dim {doc['input_dim']} does not match layers "
            f"({gen.input_dim})"
        )
    return gen
