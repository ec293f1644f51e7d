"""Learned unfolded solvers with hand-rolled complex reverse-mode gradients.

Two unrolled architectures over L layers:

  lista:  alpha^{l+1} = s_{eta_l}(V_a^l alpha^l + V_b^l y), alpha^0 = 0,
          per-layer weights V_a (G x G), V_b (G x N_RF), threshold eta_l.

  sdl:    h^{l+1} = V_A^H s_{eta_l}(V_A (h^l - kappa_l V (W h^l - y))),
          h^0 = 0, with V (N x N_RF) and the sparsifying pair V_A
          (G' x N) shared across layers; per-layer eta_l and step kappa_l.

s_eta is the complex magnitude shrinkage. Training minimizes the
unsquared batch loss L = sum_s ||label_s - output_s||_2 with Adam.

Gradient convention (Wirtinger): for a complex tensor the stored gradient
is g = dL/d(conj(param)), so the true partial derivatives per real
coordinate are dL/dRe = 2 Re(g) and dL/dIm = 2 Im(g). Real parameters
(eta, kappa) store the plain derivative. Backward passes are closed-form
matrix products, so gradient accumulation order is fixed and results are
reproducible bit for bit.

Batch orientation: forward/backward routines take samples as columns
(y is (N_RF, B)); the train/predict wrappers accept row-major arrays.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._binio import (
    FormatError,
    read_complex_interleaved,
    read_f64_array,
    read_magic,
    read_u32,
    read_u64,
    read_u8,
    write_complex_interleaved,
    write_f64_array,
    write_magic,
    write_u32,
    write_u64,
    write_u8,
)
from .numerics import CMat, NonConvergence, Rng
from .solvers import SensingOperator, soft_threshold

CKPT_MAGIC = b"NFCSCKPT"
CKPT_VERSION = 1

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class MissingCheckpoint(FileNotFoundError):
    """A learned method was benchmarked without a trained checkpoint."""


@dataclass
class ListaParams:
    """Per-layer unfolded ISTA weights."""

    v_a: list  # L arrays (G, G)
    v_b: list  # L arrays (G, N_RF)
    eta: np.ndarray  # (L,) real, >= 0

    @property
    def n_layers(self) -> int:
        return len(self.v_a)

    @property
    def dims(self) -> tuple:
        return self.v_a[0].shape[0], self.v_b[0].shape[1]

    def tensors(self) -> dict:
        """Named tensors in canonical (declaration) order."""
        out = {}
        for l, m in enumerate(self.v_a):
            out[f"v_a.{l}"] = m
        for l, m in enumerate(self.v_b):
            out[f"v_b.{l}"] = m
        out["eta"] = self.eta
        return out

    def copy(self) -> "ListaParams":
        return ListaParams(v_a=[m.copy() for m in self.v_a],
                           v_b=[m.copy() for m in self.v_b],
                           eta=self.eta.copy())


@dataclass
class SdlListaParams:
    """Shared-operator unfolded weights with a learned sparsifying pair."""

    v: CMat  # (N, N_RF), shared across layers
    v_a: CMat  # (G', N), shared across layers
    eta: np.ndarray  # (L,) real, >= 0
    kappa: np.ndarray  # (L,) real

    @property
    def n_layers(self) -> int:
        return self.eta.shape[0]

    @property
    def dims(self) -> tuple:
        return self.v.shape[0], self.v.shape[1], self.v_a.shape[0]

    def tensors(self) -> dict:
        return {"v": self.v, "v_a": self.v_a, "eta": self.eta, "kappa": self.kappa}

    def copy(self) -> "SdlListaParams":
        return SdlListaParams(v=self.v.copy(), v_a=self.v_a.copy(),
                              eta=self.eta.copy(), kappa=self.kappa.copy())


INIT_SCHEMES = ("scaled", "literal", "structured")


def _uniform_complex(rng: Rng, shape: tuple, scheme: str) -> CMat:
    re = rng.uniform(0.0, 1.0, shape)
    im = rng.uniform(0.0, 1.0, shape)
    m = re + 1j * im
    if scheme == "scaled":
        m = m / np.sqrt(shape[1])
    elif scheme != "literal":
        raise ValueError(f"unknown init scheme {scheme!r}")
    return m.astype(np.complex128)


def dft_frame(g_sparse: int, n: int) -> CMat:
    """Oversampled DFT analysis frame with unit-gain synthesis.

    Rows are g_sparse uniformly spaced spatial harmonics; the 1/sqrt(g_sparse)
    scaling makes F^H F = I exactly whenever g_sparse >= n, so analysis
    followed by synthesis is lossless.
    """
    rows = np.arange(g_sparse)[:, None]
    cols = np.arange(n)[None, :]
    return (np.exp(-2j * np.pi * rows * cols / g_sparse)
            / np.sqrt(g_sparse)).astype(np.complex128)


def init_lista_params(n_layers: int, g: int, n_rf: int, rng: Rng,
                      scheme: str = "scaled", eta0: float = 1e-4,
                      op: Optional[SensingOperator] = None) -> ListaParams:
    """Fresh LISTA parameters.

    "scaled" and "literal" draw U(0,1) real/imag entries, the former divided
    by sqrt(fan_in). "structured" replicates one classic iteration per layer:
    V_a = I - Psi^H Psi / lambda_max and V_b = Psi^H / lambda_max, which needs
    the sensing operator and starts the network at the fixed-step baseline
    instead of a random map.
    """
    if scheme not in INIT_SCHEMES:
        raise ValueError(f"unknown init scheme {scheme!r}")
    if scheme == "structured":
        if op is None:
            raise ValueError("structured init needs the sensing operator")
        params = ista_initialized_lista(op, 1.0, n_layers)
        params.eta[:] = eta0
        return params
    v_a = [_uniform_complex(rng, (g, g), scheme) for _ in range(n_layers)]
    v_b = [_uniform_complex(rng, (g, n_rf), scheme) for _ in range(n_layers)]
    eta = np.full(n_layers, eta0, dtype=np.float64)
    return ListaParams(v_a=v_a, v_b=v_b, eta=eta)


def init_sdl_params(n_layers: int, n: int, n_rf: int, g_sparse: int, rng: Rng,
                    scheme: str = "scaled", eta0: float = 1e-4,
                    kappa0: float = 1.0, combiner=None) -> SdlListaParams:
    """Fresh weight-tied parameters.

    "structured" sets V = W^H (so the inner update is a plain gradient step
    on the measurement residual) and V_A to the oversampled DFT frame, which
    needs the combiner. The random schemes match init_lista_params.
    """
    if scheme not in INIT_SCHEMES:
        raise ValueError(f"unknown init scheme {scheme!r}")
    if scheme == "structured":
        if combiner is None:
            raise ValueError("structured init needs the combiner")
        v = np.ascontiguousarray(combiner.w.conj().T, dtype=np.complex128)
        v_a = dft_frame(g_sparse, n)
    else:
        v = _uniform_complex(rng, (n, n_rf), scheme)
        v_a = _uniform_complex(rng, (g_sparse, n), scheme)
    eta = np.full(n_layers, eta0, dtype=np.float64)
    kappa = np.full(n_layers, kappa0, dtype=np.float64)
    return SdlListaParams(v=v, v_a=v_a, eta=eta, kappa=kappa)


def ista_initialized_lista(op: SensingOperator, xi: float, n_layers: int) -> ListaParams:
    """LISTA weights that replicate ISTA: V_a = I - Psi^H Psi / lam,
    V_b = Psi^H / lam, eta = xi / lam on every layer."""
    lam = op.lambda_max
    g = op.shape[1]
    gram = op.psi_h @ op.psi
    v_a = np.eye(g, dtype=np.complex128) - gram / lam
    v_b = op.psi_h / lam
    eta = np.full(n_layers, xi / lam, dtype=np.float64)
    return ListaParams(v_a=[v_a.copy() for _ in range(n_layers)],
                       v_b=[v_b.copy() for _ in range(n_layers)], eta=eta)


@dataclass
class GradientTape:
    """Per-layer intermediates retained for the backward pass."""

    kind: str
    y: CMat
    layers: list
    output: CMat


def lista_forward(params: ListaParams, y: CMat) -> tuple:
    """Run the unrolled network. y is (N_RF, B); returns (alpha (G, B), tape)."""
    g = params.v_a[0].shape[0]
    alpha = np.zeros((g, y.shape[1]), dtype=np.complex128)
    layers = []
    for v_a, v_b, eta in zip(params.v_a, params.v_b, params.eta):
        z = v_a @ alpha + v_b @ y
        layers.append((alpha, z))
        alpha = soft_threshold(z, eta)
    return alpha, GradientTape(kind="lista", y=y, layers=layers, output=alpha)


def sdl_forward(params: SdlListaParams, w: CMat, y: CMat) -> tuple:
    """Run the shared-operator network. Returns (h (N, B), tape).

    Tape rows per layer: (h_in, u = W h - y, vu = V u, vh = h - kappa vu,
    t = V_A vh, s = s_eta(t)).
    """
    n = params.v.shape[0]
    h = np.zeros((n, y.shape[1]), dtype=np.complex128)
    layers = []
    v_a_h = params.v_a.conj().T
    for l in range(params.n_layers):
        u = w @ h - y
        vu = params.v @ u
        vh = h - params.kappa[l] * vu
        t = params.v_a @ vh
        s = soft_threshold(t, params.eta[l])
        layers.append((h, u, vu, vh, t, s))
        h = v_a_h @ s
    return h, GradientTape(kind="sdl", y=y, layers=layers, output=h)


def unsquared_loss(output: CMat, target: CMat) -> tuple:
    """Batch loss sum_s ||target_s - output_s||_2 and its output cogradient.

    The cogradient of column r = output - target is r / (2 ||r||); a
    zero-residual column contributes the zero subgradient.
    """
    r = output - target
    norms = np.linalg.norm(r, axis=0)
    loss = float(np.sum(norms))
    safe = np.where(norms > 0, norms, 1.0)
    cograd = r / (2.0 * safe)
    cograd[:, norms == 0] = 0.0
    return loss, cograd


def _shrink_partials(z: CMat, eta: float) -> tuple:
    """Wirtinger partials of s_eta at z: (ds/dz, ds/dconj(z), unit direction).

    On the active set |z| > eta: ds/dz = 1 - eta/(2|z|) (real) and
    ds/dconj(z) = eta z^2 / (2|z|^3); both vanish on the dead set, as does
    the subgradient at the kink.
    """
    mag = np.abs(z)
    active = mag > eta
    safe = np.where(mag > 0, mag, 1.0)
    a = np.where(active, 1.0 - eta / (2.0 * safe), 0.0)
    b = np.where(active, eta * z * z / (2.0 * safe ** 3), 0.0)
    unit = np.where(active, z / safe, 0.0)
    return a, b, unit


def lista_backward(params: ListaParams, tape: GradientTape, cograd: CMat) -> dict:
    """Reverse pass from the output cogradient. Returns grads keyed like tensors()."""
    grads = {f"v_a.{l}": np.zeros_like(params.v_a[l]) for l in range(params.n_layers)}
    grads.update({f"v_b.{l}": np.zeros_like(params.v_b[l]) for l in range(params.n_layers)})
    grads["eta"] = np.zeros_like(params.eta)
    g_alpha = cograd
    y_h = tape.y.conj().T
    for l in reversed(range(params.n_layers)):
        alpha_in, z = tape.layers[l]
        a, b, unit = _shrink_partials(z, params.eta[l])
        grads["eta"][l] = -2.0 * float(np.sum(np.real(g_alpha * np.conj(unit))))
        g_z = a * g_alpha + b * np.conj(g_alpha)
        grads[f"v_a.{l}"] = g_z @ alpha_in.conj().T
        grads[f"v_b.{l}"] = g_z @ y_h
        g_alpha = params.v_a[l].conj().T @ g_z
    return grads


def sdl_backward(params: SdlListaParams, w: CMat, tape: GradientTape,
                 cograd: CMat) -> dict:
    """Reverse pass for the shared-operator network."""
    grads = {"v": np.zeros_like(params.v), "v_a": np.zeros_like(params.v_a),
             "eta": np.zeros_like(params.eta), "kappa": np.zeros_like(params.kappa)}
    g_h = cograd
    w_h = w.conj().T
    for l in reversed(range(params.n_layers)):
        h_in, u, vu, vh, t, s = tape.layers[l]
        # h_out = V_A^H s
        grads["v_a"] += s @ g_h.conj().T
        g_s = params.v_a @ g_h
        # s = shrink(t)
        a, b, unit = _shrink_partials(t, params.eta[l])
        grads["eta"][l] += -2.0 * float(np.sum(np.real(g_s * np.conj(unit))))
        g_t = a * g_s + b * np.conj(g_s)
        # t = V_A vh
        grads["v_a"] += g_t @ vh.conj().T
        g_vh = params.v_a.conj().T @ g_t
        # vh = h_in - kappa * vu
        grads["kappa"][l] += -2.0 * float(np.sum(np.real(g_vh * np.conj(vu))))
        g_vu = -params.kappa[l] * g_vh
        # vu = V u
        grads["v"] += g_vu @ u.conj().T
        g_u = params.v.conj().T @ g_vu
        # u = W h_in - y
        g_h = g_vh + w_h @ g_u
    return grads


def lista_predict(params: ListaParams, y_rows: np.ndarray) -> np.ndarray:
    """Row-major convenience wrapper: (B, N_RF) -> (B, G)."""
    alpha, _ = lista_forward(params, np.asarray(y_rows, dtype=np.complex128).T)
    return alpha.T


def sdl_predict(params: SdlListaParams, w: CMat, y_rows: np.ndarray) -> np.ndarray:
    """Row-major convenience wrapper: (B, N_RF) -> (B, N)."""
    h, _ = sdl_forward(params, w, np.asarray(y_rows, dtype=np.complex128).T)
    return h.T


class AdamState:
    """First/second moment buffers, one pair per named tensor."""

    def __init__(self):
        self.t = 0
        self.m: dict = {}
        self.v: dict = {}

    def copy(self) -> "AdamState":
        out = AdamState()
        out.t = self.t
        out.m = {k: v.copy() for k, v in self.m.items()}
        out.v = {k: v.copy() for k, v in self.v.items()}
        return out


def _float_view(arr: np.ndarray) -> np.ndarray:
    """Real view of a tensor: complex arrays expose interleaved (re, im)."""
    return arr.view(np.float64) if np.iscomplexobj(arr) else arr


def adam_step(params, grads: dict, state: AdamState, lr: float) -> None:
    """One Adam update in place over all named tensors.

    Complex tensors update component-wise on (re, im) using the true
    partial derivatives (2 Re g, 2 Im g); real tensors use the plain
    derivative. Thresholds are clamped to eta >= 0 after the step.
    """
    tensors = params.tensors()
    state.t += 1
    bc1 = 1.0 - ADAM_BETA1 ** state.t
    bc2 = 1.0 - ADAM_BETA2 ** state.t
    for name, tensor in tensors.items():
        view = _float_view(tensor)
        g = _float_view(grads[name])
        if np.iscomplexobj(tensor):
            g = 2.0 * g
        if name not in state.m:
            state.m[name] = np.zeros_like(view)
            state.v[name] = np.zeros_like(view)
        m, v = state.m[name], state.v[name]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * (g * g)
        view -= lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)
    eta = tensors["eta"]
    np.maximum(eta, 0.0, out=eta)


@dataclass
class TrainConfig:
    """Optimization settings shared by both model kinds."""

    epochs: int = 150
    batch_size: int = 256
    lr: float = 1e-4
    patience: int = 10
    seed: int = 0
    init_scheme: str = "scaled"
    eta0: float = 1e-4
    kappa0: float = 1.0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")


@dataclass
class TrainResult:
    params: object
    adam_state: AdamState
    history: list  # rows (epoch, train_loss, test_nmse_db, wall_seconds)
    best_epoch: int
    best_nmse_db: float


def _nmse_db_mean(pred_rows: np.ndarray, target_rows: np.ndarray) -> float:
    err = np.sum(np.abs(pred_rows - target_rows) ** 2, axis=1)
    ref = np.sum(np.abs(target_rows) ** 2, axis=1)
    ratio = float(np.mean(err / ref))
    return 10.0 * np.log10(max(ratio, 1e-12))


def data_scale(train_data, cap: int = 1024) -> float:
    """RMS observation magnitude over the first min(cap, size) samples.

    Training runs on observations and labels divided by this scale so the
    shrinkage thresholds and Adam steps operate on O(1) data regardless of
    the physical gain level (channel gains are ~1e-5 at mmWave ranges,
    which would otherwise start the network fully dead at eta0 = 1e-4).
    The shrinkage is positively homogeneous, s * s_eta(z) =
    s_{s*eta}(s * z), so the trained network is converted back exactly by
    multiplying the thresholds by the scale; weights are unchanged.
    """
    k = min(train_data.size, cap)
    y, _, _ = train_data.batch(np.arange(k))
    s = float(np.sqrt(np.mean(np.abs(y) ** 2)))
    if not (s > 0):
        raise ValueError("training observations have zero scale")
    return s


def _rescale_params(params, s: float):
    """Exact conversion of a scale-s-trained network to raw data."""
    out = params.copy()
    out.eta *= s
    return out


def _eval_nmse_db(model_kind: str, params, dictionary, w: CMat, eval_data,
                  batch_size: int, scale: float = 1.0) -> float:
    """Channel-domain NMSE (dB of the mean ratio) over an sdl-kind eval set.

    scale divides both observations and references; NMSE is scale
    invariant, so this evaluates a normalized-space network directly.
    """
    preds = []
    targets = []
    for start in range(0, eval_data.size, batch_size):
        idx = np.arange(start, min(start + batch_size, eval_data.size))
        y, h_star, _ = eval_data.batch(idx)
        y = y / scale
        if model_kind == "lista":
            alpha = lista_predict(params, y)
            pred = alpha @ dictionary.atoms.T
        else:
            pred = sdl_predict(params, w, y)
        preds.append(pred)
        targets.append(h_star / scale)
    return _nmse_db_mean(np.vstack(preds), np.vstack(targets))


def train(model_kind: str, params, train_data, eval_data, dictionary, combiner,
          cfg: TrainConfig) -> TrainResult:
    """Adam training loop with patience on the eval-set channel NMSE.

    train_data: lista-kind for model_kind "lista" (labels alpha*),
    sdl-kind for "sdl" (labels h*). eval_data: always sdl-kind; the
    tracked metric is NMSE against the true channel. Returns the
    best-on-eval parameters. Shuffling derives from cfg.seed, so identical
    configs reproduce identical histories.

    Optimization runs in a normalized data space (see data_scale); the
    returned parameters are converted back exactly, so they operate on
    raw observations. The stored Adam moments remain in normalized space.
    """
    if model_kind not in ("lista", "sdl"):
        raise ValueError(f"model_kind must be lista or sdl, got {model_kind!r}")
    if eval_data.kind != "sdl":
        raise ValueError("eval_data must be sdl-kind (channel labels)")
    if train_data.kind != model_kind:
        raise ValueError(f"{model_kind} training expects {model_kind}-kind data, "
                         f"got {train_data.kind}")
    w = combiner.w
    rng = Rng(cfg.seed + 1)  # +1 keeps the shuffle stream apart from init draws
    scale = data_scale(train_data)

    state = AdamState()
    history = []
    best = (np.inf, 0, params.copy(), state.copy())
    stall = 0
    start_time = time.perf_counter()
    for epoch in range(1, cfg.epochs + 1):
        perm = rng.permutation(train_data.size)
        total_loss = 0.0
        for s in range(0, train_data.size, cfg.batch_size):
            idx = perm[s:s + cfg.batch_size]
            y_rows, labels, _ = train_data.batch(idx)
            y = y_rows.T / scale
            target = labels.T / scale
            if model_kind == "lista":
                out, tape = lista_forward(params, y)
                loss, cograd = unsquared_loss(out, target)
                grads = lista_backward(params, tape, cograd)
            else:
                out, tape = sdl_forward(params, w, y)
                loss, cograd = unsquared_loss(out, target)
                grads = sdl_backward(params, w, tape, cograd)
            total_loss += loss
            adam_step(params, grads, state, cfg.lr)
        train_loss = scale * total_loss / train_data.size  # report raw-scale loss
        if not np.isfinite(train_loss):
            raise NonConvergence(f"training loss diverged at epoch {epoch}")
        nmse_db = _eval_nmse_db(model_kind, params, dictionary, w, eval_data,
                                cfg.batch_size, scale)
        history.append((epoch, train_loss, nmse_db,
                        time.perf_counter() - start_time))
        if nmse_db < best[0]:
            best = (nmse_db, epoch, params.copy(), state.copy())
            stall = 0
        else:
            stall += 1
            if stall >= cfg.patience:
                break
    return TrainResult(params=_rescale_params(best[2], scale), adam_state=best[3],
                       history=history, best_epoch=best[1], best_nmse_db=best[0])


def init_model_params(model_kind: str, n_layers: int, dictionary, combiner,
                      cfg: TrainConfig, g_sparse: Optional[int] = None):
    """Fresh parameters for either model kind, seeded from cfg.seed."""
    rng = Rng(cfg.seed)
    n, n_rf = combiner.w.shape[1], combiner.w.shape[0]
    if model_kind == "lista":
        op = (SensingOperator(combiner, dictionary)
              if cfg.init_scheme == "structured" else None)
        return init_lista_params(n_layers, dictionary.size, n_rf, rng,
                                 cfg.init_scheme, cfg.eta0, op=op)
    if model_kind == "sdl":
        if g_sparse is None:
            g_sparse = dictionary.size // 4
        return init_sdl_params(n_layers, n, n_rf, g_sparse, rng,
                               cfg.init_scheme, cfg.eta0, cfg.kappa0,
                               combiner=combiner)
    raise ValueError(f"unknown model_kind {model_kind!r}")


def train_model(model_kind: str, n_layers: int, train_data, eval_data, dictionary,
                combiner, cfg: TrainConfig, g_sparse: Optional[int] = None) -> TrainResult:
    """Initialize (from cfg.seed) and train a fresh model."""
    params = init_model_params(model_kind, n_layers, dictionary, combiner, cfg,
                               g_sparse)
    return train(model_kind, params, train_data, eval_data, dictionary, combiner, cfg)


_KIND_CODES = {"lista": 1, "sdl": 2}
_KIND_NAMES = {1: "lista", 2: "sdl"}


def save_checkpoint(path, params, adam_state: Optional[AdamState] = None) -> None:
    """Write the NFCSCKPT binary format.

    Layout: magic, version u32, model_kind u8, L u32, dims (lista: G u32,
    N_RF u32; sdl: N u32, N_RF u32, G' u32), tensors as f64 little-endian
    in declaration order (complex interleaved re/im, real tensors plain),
    then the Adam state: t u64 followed by m and v buffers per tensor in
    the same order. A zeroed state is written when none is supplied.
    """
    kind = "lista" if isinstance(params, ListaParams) else "sdl"
    with open(path, "wb") as fh:
        write_magic(fh, CKPT_MAGIC, CKPT_VERSION)
        write_u8(fh, _KIND_CODES[kind])
        write_u32(fh, params.n_layers)
        if kind == "lista":
            g, n_rf = params.dims
            write_u32(fh, g)
            write_u32(fh, n_rf)
        else:
            n, n_rf, g_sparse = params.dims
            write_u32(fh, n)
            write_u32(fh, n_rf)
            write_u32(fh, g_sparse)
        tensors = params.tensors()
        for arr in tensors.values():
            if np.iscomplexobj(arr):
                write_complex_interleaved(fh, arr)
            else:
                write_f64_array(fh, arr)
        state = adam_state if adam_state is not None else AdamState()
        write_u64(fh, state.t)
        for name, arr in tensors.items():
            shape = _float_view(arr).shape
            m = state.m.get(name, np.zeros(shape))
            v = state.v.get(name, np.zeros(shape))
            write_f64_array(fh, m)
            write_f64_array(fh, v)


def load_checkpoint(path) -> tuple:
    """Read NFCSCKPT: returns (params, adam_state)."""
    try:
        fh = open(path, "rb")
    except FileNotFoundError as exc:
        raise MissingCheckpoint(str(path)) from exc
    with fh:
        read_magic(fh, CKPT_MAGIC, CKPT_VERSION)
        kind_code = read_u8(fh)
        if kind_code not in _KIND_NAMES:
            raise FormatError(f"unknown model kind code {kind_code}")
        kind = _KIND_NAMES[kind_code]
        n_layers = read_u32(fh)
        if kind == "lista":
            g = read_u32(fh)
            n_rf = read_u32(fh)
            v_a = [read_complex_interleaved(fh, (g, g)) for _ in range(n_layers)]
            v_b = [read_complex_interleaved(fh, (g, n_rf)) for _ in range(n_layers)]
            eta = read_f64_array(fh, n_layers)
            params: object = ListaParams(v_a=v_a, v_b=v_b, eta=eta)
        else:
            n = read_u32(fh)
            n_rf = read_u32(fh)
            g_sparse = read_u32(fh)
            v = read_complex_interleaved(fh, (n, n_rf))
            v_a = read_complex_interleaved(fh, (g_sparse, n))
            eta = read_f64_array(fh, n_layers)
            kappa = read_f64_array(fh, n_layers)
            params = SdlListaParams(v=v, v_a=v_a, eta=eta, kappa=kappa)
        state = AdamState()
        state.t = read_u64(fh)
        for name, arr in params.tensors().items():
            shape = _float_view(arr).shape
            count = int(np.prod(shape))
            state.m[name] = read_f64_array(fh, count).reshape(shape)
            state.v[name] = read_f64_array(fh, count).reshape(shape)
        extra = fh.read(1)
    if extra:
        raise FormatError("trailing bytes after checkpoint payload")
    return params, state
