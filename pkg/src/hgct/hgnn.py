"""Dynamic hypergraph network: forward pass, exact gradients, checkpoint I/O.

Architecture (channel width C, 5 convolution layers, 4 structure updates):

  X^0   = l2norm(input_lift([src | tgt]))          per-correspondence 6-vector
  per layer t = 0..4:
    Yhat = De^-1 H^T X            (1/0 -> 0 for empty hyperedges)
    Y^t  = l2norm(mlp1_t([Y^{t-1} | Yhat]))        Y^{-1} is all zeros
    Xhat = Dv^-1 H We Y^t         We = column sums of W_H^t
    X    = relu(X^t + mlp2_t(Xhat))
    X^{t+1} = l2norm(nonlocal_t(X, W_nl))          W_nl = initial weight matrix
  between layers (t = 0..3):
    S = sigmoid(q_t(X^{t+1}) k_t(Y^t)^T / sqrt(C) + mask)
    per vertex row: keep the K2(t) highest-S incident hyperedges,
    K2(t) = max(1, round(0.1 * (4 - t) * N)); kept sigmoid values become
    W_H^{t+1}, their support becomes H^{t+1}
  shat = sigmoid(conf_head(X^5))

The top-K selection is treated as constant support during differentiation:
gradients flow through the retained sigmoid magnitudes only.

Checkpoint format: ASCII magic line b"HGCT-CKPT v1\n", then three
little-endian uint32 (channels, layer count, total parameter count), then all
parameters as little-endian float64 in the order given by `param_specs`
(sigma_f is stored last, as its log).
"""

import struct
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import autodiff as av
from .compat import round_half_up
from .errors import NonFinite
from .geom import CorrSet
from .hypergraph import Hypergraph

N_LAYERS = 5
N_UPDATES = 4
MASK_NEG = 1e30       # finite stand-in for -inf in the update mask
NONLOCAL_EPS = 1e-12  # floor inside log(W + eps)

CKPT_MAGIC = b"HGCT-CKPT v1\n"


def param_specs(channels: int) -> List[Tuple[str, Tuple[int, ...]]]:
    """(name, shape) for every parameter, in serialization order."""
    c = channels
    specs: List[Tuple[str, Tuple[int, ...]]] = [
        ("input_lift.w", (6, c)), ("input_lift.b", (c,)),
    ]
    for t in range(N_LAYERS):
        specs += [
            (f"mlp1.{t}.w1", (2 * c, c)), (f"mlp1.{t}.b1", (c,)),
            (f"mlp1.{t}.w2", (c, c)), (f"mlp1.{t}.b2", (c,)),
            (f"mlp2.{t}.w1", (c, c)), (f"mlp2.{t}.b1", (c,)),
            (f"mlp2.{t}.w2", (c, c)), (f"mlp2.{t}.b2", (c,)),
        ]
        for proj in ("theta", "phi", "g", "out"):
            specs += [(f"nl.{t}.{proj}.w", (c, c)), (f"nl.{t}.{proj}.b", (c,))]
    for t in range(N_UPDATES):
        specs += [
            (f"upd.{t}.q.w", (c, c)), (f"upd.{t}.q.b", (c,)),
            (f"upd.{t}.k.w", (c, c)), (f"upd.{t}.k.b", (c,)),
        ]
    specs += [("conf.w", (c, 1)), ("conf.b", (1,)), ("log_sigma_f", ())]
    return specs


class HgnnParams:
    """All learnable tensors, keyed by name, values held as autodiff leaves."""

    def __init__(self, channels: int, tensors: Dict[str, av.Var]):
        self.channels = channels
        self.tensors = tensors

    @property
    def names(self) -> List[str]:
        return [name for name, _ in param_specs(self.channels)]

    def var(self, name: str) -> av.Var:
        return self.tensors[name]

    def value(self, name: str) -> np.ndarray:
        return self.tensors[name].value

    @property
    def sigma_f(self) -> float:
        return float(np.exp(self.tensors["log_sigma_f"].value))

    def n_params(self) -> int:
        return sum(v.value.size for v in self.tensors.values())

    def flat(self) -> np.ndarray:
        return np.concatenate([self.tensors[n].value.ravel() for n in self.names])

    def copy(self) -> "HgnnParams":
        tensors = {n: av.param(v.value.copy()) for n, v in self.tensors.items()}
        return HgnnParams(self.channels, tensors)


def init_params(channels: int = 32, seed: int = 0, sigma_f0: float = 1.0) -> HgnnParams:
    """He-initialized weights, zero biases, sigma_f stored as its log."""
    rng = np.random.default_rng(seed)
    tensors: Dict[str, av.Var] = {}
    for name, shape in param_specs(channels):
        if name == "log_sigma_f":
            tensors[name] = av.param(np.log(sigma_f0))
        elif name.endswith(".b"):
            tensors[name] = av.param(np.zeros(shape))
        else:
            fan_in = shape[0]
            tensors[name] = av.param(rng.normal(0.0, np.sqrt(2.0 / fan_in), shape))
    return HgnnParams(channels, tensors)


def save_checkpoint(params: HgnnParams, path) -> None:
    with open(path, "wb") as f:
        f.write(CKPT_MAGIC)
        f.write(struct.pack("<III", params.channels, N_LAYERS, params.n_params()))
        for name in params.names:
            f.write(np.ascontiguousarray(params.value(name), dtype="<f8").tobytes())


def load_checkpoint(path) -> HgnnParams:
    with open(path, "rb") as f:
        magic = f.read(len(CKPT_MAGIC))
        if magic != CKPT_MAGIC:
            raise ValueError(f"not a checkpoint file (bad magic): {path}")
        channels, layers, count = struct.unpack("<III", f.read(12))
        if layers != N_LAYERS:
            raise ValueError(f"checkpoint has {layers} layers; this build expects {N_LAYERS}")
        tensors: Dict[str, av.Var] = {}
        for name, shape in param_specs(channels):
            size = int(np.prod(shape)) if shape else 1
            buf = f.read(8 * size)
            if len(buf) != 8 * size:
                raise ValueError("truncated checkpoint")
            arr = np.frombuffer(buf, dtype="<f8").astype(np.float64).reshape(shape)
            tensors[name] = av.param(arr)
        total = sum(v.value.size for v in tensors.values())
        if total != count:
            raise ValueError("checkpoint parameter count mismatch")
    return HgnnParams(channels, tensors)


@dataclass
class ForwardTrace:
    """Per-layer states plus tape handles sufficient for backpropagation."""

    xs: List[np.ndarray]        # X^0 .. X^5, each (N, C)
    ys: List[np.ndarray]        # Y^0 .. Y^4
    hs: List[np.ndarray]        # H^0 .. H^4, binary
    whs: List[np.ndarray]       # W_H^0 .. W_H^4
    s_hat: np.ndarray           # (N,) confidence in (0, 1)
    w_nonlocal: np.ndarray      # attention bias source (initial weights)
    channels: int
    x_vars: List[av.Var]
    y_vars: List[av.Var]
    wh_vars: List[av.Var]
    s_var: av.Var

    @property
    def n(self) -> int:
        return len(self.s_hat)

    @property
    def x_final(self) -> np.ndarray:
        return self.xs[-1]

    @property
    def h_final(self) -> np.ndarray:
        return self.hs[-1]

    @property
    def wh_final(self) -> np.ndarray:
        return self.whs[-1]

    def final_hypergraph(self) -> Hypergraph:
        return Hypergraph(h=self.hs[-1].copy(), w_h=self.whs[-1].copy())


@dataclass
class LossGrads:
    """Upstream gradients w.r.t. the trace outputs, used to seed backward()."""

    d_s_hat: Optional[np.ndarray] = None
    d_x_final: Optional[np.ndarray] = None
    d_wh_final: Optional[np.ndarray] = None


def _affine(x: av.Var, params: HgnnParams, prefix: str) -> av.Var:
    return av.add(av.matmul(x, params.var(prefix + ".w")), params.var(prefix + ".b"))


def _mlp(x: av.Var, params: HgnnParams, prefix: str) -> av.Var:
    hidden = av.relu(av.add(av.matmul(x, params.var(prefix + ".w1")),
                            params.var(prefix + ".b1")))
    return av.add(av.matmul(hidden, params.var(prefix + ".w2")),
                  params.var(prefix + ".b2"))


def _safe_inv(v: np.ndarray) -> np.ndarray:
    return np.where(v > 0, 1.0 / np.where(v > 0, v, 1.0), 0.0)


def _nonlocal(x: av.Var, log_bias: np.ndarray, params: HgnnParams, layer: int) -> av.Var:
    c = params.channels
    q = _affine(x, params, f"nl.{layer}.theta")
    k = _affine(x, params, f"nl.{layer}.phi")
    v = _affine(x, params, f"nl.{layer}.g")
    logits = av.add(av.mul(av.matmul(q, av.transpose(k)), 1.0 / np.sqrt(c)), log_bias)
    attn = av.softmax_rows(logits)
    msg = _affine(av.matmul(attn, v), params, f"nl.{layer}.out")
    return av.add(x, msg)


def nonlocal_apply(x: np.ndarray, w: np.ndarray, params: HgnnParams,
                   layer: int = 0) -> np.ndarray:
    """Feature enhancement A @ g(X) with attention biased by log(w + eps).

    Standalone (no tape) entry point; `w` is any symmetric nonnegative matrix.
    """
    bias = np.log(np.asarray(w, dtype=np.float64) + NONLOCAL_EPS)
    with av.no_grad():
        out = _nonlocal(av.wrap(np.asarray(x, dtype=np.float64)), bias, params, layer)
    return out.value


def k2_schedule(n: int) -> List[int]:
    """Per-update retention counts: fractions 0.4, 0.3, 0.2, 0.1 of N."""
    return [max(1, round_half_up(0.1 * (N_LAYERS - (t + 1)) * n))
            for t in range(N_UPDATES)]


def _topk_retention(scores: np.ndarray, support: np.ndarray, k2: int) -> np.ndarray:
    """Per-row mask keeping the k2 highest-score entries within `support`.

    Rows with at most k2 supported entries keep them all. Ties break toward
    the lower column index.
    """
    n = scores.shape[0]
    mask = np.zeros_like(support)
    for i in range(n):
        cand = np.flatnonzero(support[i] > 0)
        if cand.size == 0:
            continue
        if cand.size <= k2:
            mask[i, cand] = 1.0
            continue
        order = np.lexsort((cand, -scores[i, cand]))
        mask[i, cand[order[:k2]]] = 1.0
    return mask


def _check_finite(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"non-finite values in {name}")


def forward(corrs: CorrSet, hg0: Hypergraph, w_h0: np.ndarray,
            params: HgnnParams) -> ForwardTrace:
    """Run the network on one correspondence set.

    hg0 is the initial hypergraph; w_h0 is the raw initial weight matrix used
    as the NonLocal attention bias. Records the autodiff tape unless called
    under autodiff.no_grad().
    """
    n = len(corrs)
    if n < 3:
        raise ValueError("need at least 3 correspondences")
    c = params.channels
    w_h0 = np.asarray(w_h0, dtype=np.float64)
    log_bias = np.log(w_h0 + NONLOCAL_EPS)

    inp = np.concatenate([corrs.src, corrs.tgt], axis=1)
    x = av.l2norm_rows(_affine(av.wrap(inp), params, "input_lift"))
    y_prev = av.wrap(np.zeros((n, c)))

    h = hg0.h.copy()
    wh: av.Var = av.wrap(hg0.w_h)
    k2s = k2_schedule(n)

    x_vars = [x]
    y_vars: List[av.Var] = []
    wh_vars = [wh]
    hs = [h]

    for t in range(N_LAYERS):
        de_inv = _safe_inv(h.sum(axis=0))
        yhat = av.mul(av.matmul(av.wrap(h.T), x), de_inv[:, None])
        y = av.l2norm_rows(_mlp(av.concat_cols(y_prev, yhat), params, f"mlp1.{t}"))

        we = av.vsum(wh, axis=0)
        dv_inv = _safe_inv(h.sum(axis=1))
        xhat = av.mul(av.matmul(av.wrap(h), av.mul(av.reshape(we, (n, 1)), y)),
                      dv_inv[:, None])
        xres = av.relu(av.add(x, _mlp(xhat, params, f"mlp2.{t}")))
        x = av.l2norm_rows(_nonlocal(xres, log_bias, params, t))

        x_vars.append(x)
        y_vars.append(y)
        y_prev = y

        if t < N_UPDATES:
            q = _affine(x, params, f"upd.{t}.q")
            k = _affine(y, params, f"upd.{t}.k")
            mask = np.where(h > 0, 0.0, -MASK_NEG)
            s_full = av.sigmoid(av.add(av.mul(av.matmul(q, av.transpose(k)),
                                              1.0 / np.sqrt(c)), mask))
            retention = _topk_retention(s_full.value, h, k2s[t])
            wh = av.mul(s_full, retention)
            h = retention
            hs.append(h)
            wh_vars.append(wh)

    s_hat = av.reshape(av.sigmoid(_affine(x, params, "conf")), (n,))

    xs = [v.value for v in x_vars]
    ys = [v.value for v in y_vars]
    whs = [v.value for v in wh_vars]
    for i, arr in enumerate(xs):
        _check_finite(f"X^{i}", arr)
    for i, arr in enumerate(ys):
        _check_finite(f"Y^{i}", arr)
    for i, arr in enumerate(whs):
        _check_finite(f"W_H^{i}", arr)
    _check_finite("s_hat", s_hat.value)

    return ForwardTrace(xs=xs, ys=ys, hs=hs, whs=whs, s_hat=s_hat.value,
                        w_nonlocal=w_h0, channels=c, x_vars=x_vars,
                        y_vars=y_vars, wh_vars=wh_vars, s_var=s_hat)


def backward(trace: ForwardTrace, params: HgnnParams,
             loss_grads: LossGrads) -> Dict[str, np.ndarray]:
    """Parameter gradients for upstream loss gradients on the trace outputs.

    The hypergraph update's top-K selection is constant support: gradients
    reach q/k projections only through the retained sigmoid values.
    """
    n = trace.n
    outputs: List[av.Var] = []
    seeds: List[np.ndarray] = []
    if loss_grads.d_s_hat is not None:
        outputs.append(trace.s_var)
        seeds.append(np.asarray(loss_grads.d_s_hat, dtype=np.float64).reshape(n))
    if loss_grads.d_x_final is not None:
        outputs.append(trace.x_vars[-1])
        seeds.append(np.asarray(loss_grads.d_x_final, dtype=np.float64))
    if loss_grads.d_wh_final is not None:
        outputs.append(trace.wh_vars[-1])
        seeds.append(np.asarray(loss_grads.d_wh_final, dtype=np.float64))
    names = params.names
    wrt = [params.var(name) for name in names]
    if not outputs:
        return {name: np.zeros_like(params.value(name)) for name in names}
    grads = av.gradients(outputs, seeds, wrt)
    for name, g in zip(names, grads):
        _check_finite(f"grad[{name}]", g)
    return dict(zip(names, grads))
