"""Fusion regression network with hand-written gradients.

Two feature extractors run per steering angle: a Location branch over
the (eta, AoA triple, d_t) rows and an RSS branch over the flattened
antenna x zone-bin powers.  Every extractor layer is affine -> 1-D
batch norm -> ReLU, with batch statistics taken over (batch x angle)
rows per feature channel.  Two small heads (affine -> ReLU, affine ->
ReLU) gate each branch with a scalar per steering angle; the fused
tensor

    F_m = w_a * F_a + w_r * F_r

is flattened and mapped to one RWC percentage by a final affine layer.
Training minimizes mean squared error.  All tensors are float64 and all
gradients are derived analytically in backward(); finite-difference
checking lives in gradient_check().

Model variants disable parts of the network by parameter surgery (the
gate heads are pinned to constant 0 or 1 and frozen) so that variant
equivalences hold exactly rather than approximately.
"""

import json
import struct

import numpy as np

from .errors import BadMagic, IoError, ShapeMismatch
from .seeding import substream

LOCATION_SIZES = (5, 16, 64, 128, 256, 256)
HEAD_SIZES = (256, 32, 1)
FEATURES = 256

BN_EPS = 1e-5
BN_MOMENTUM = 0.1

VARIANTS = ("RSS_only", "RSS_plus_Ang", "Full")

_CHECKPOINT_MAGIC = b"LFNN"
_CHECKPOINT_VERSION = 1


def rss_sizes(kappa):
    return (3 * kappa, 64, 128, 256, 256)


def _layer_names(kappa):
    """Canonical tensor order: the draw order for seeded initialization."""
    names = []
    for i in range(1, len(LOCATION_SIZES)):
        names.append((f"loc{i}", LOCATION_SIZES[i - 1], LOCATION_SIZES[i], True))
    sizes = rss_sizes(kappa)
    for i in range(1, len(sizes)):
        names.append((f"rss{i}", sizes[i - 1], sizes[i], True))
    for head in ("head_a", "head_r"):
        names.append((f"{head}1", HEAD_SIZES[0], HEAD_SIZES[1], False))
        names.append((f"{head}2", HEAD_SIZES[1], HEAD_SIZES[2], False))
    return names


def init_params(iota, kappa, seed):
    """Seeded parameter and batch-norm-state dictionaries.

    Weights and biases draw uniformly from +-1/sqrt(fan_in); batch-norm
    scale/shift start at identity and running statistics at (0, 1).
    The one exception: the gate heads' output biases start at +1, so
    every gate opens near 1 (plain-sum fusion) instead of risking a
    ReLU whose output is zero for all inputs and whose gradient is
    therefore zero forever -- a dead gate cuts both branches off from
    the loss and the network can never recover.
    """
    rng = substream(seed, "init")
    params = {}
    state = {}
    for name, fan_in, fan_out, has_bn in _layer_names(kappa):
        bound = 1.0 / np.sqrt(fan_in)
        params[f"{name}.w"] = rng.uniform(-bound, bound, (fan_in, fan_out))
        if name in ("head_a2", "head_r2"):
            params[f"{name}.b"] = np.ones(fan_out)
        else:
            params[f"{name}.b"] = rng.uniform(-bound, bound, fan_out)
        if has_bn:
            params[f"{name}.gamma"] = np.ones(fan_out)
            params[f"{name}.beta"] = np.zeros(fan_out)
            state[f"{name}.mean"] = np.zeros(fan_out)
            state[f"{name}.var"] = np.ones(fan_out)
    reg_in = iota * FEATURES
    bound = 1.0 / np.sqrt(reg_in)
    params["reg.w"] = rng.uniform(-bound, bound, (reg_in, 1))
    params["reg.b"] = rng.uniform(-bound, bound, 1)
    return params, state


def apply_variant(params, variant):
    """Pin gate heads for a model variant; returns the frozen key set.

    RSS_only:     w_a == 0, w_r == 1, location branch frozen (the
                  prediction path is RSS extractor + regression only).
    RSS_plus_Ang: both gates pinned to 1 (plain sum fusion).
    Full:         adaptive fusion, nothing frozen.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected {VARIANTS}")
    frozen = set()
    if variant == "Full":
        return params, frozenset()
    for head, value in (("head_a", 0.0 if variant == "RSS_only" else 1.0),
                        ("head_r", 1.0)):
        params[f"{head}2.w"] = np.zeros_like(params[f"{head}2.w"])
        params[f"{head}2.b"] = np.full_like(params[f"{head}2.b"], value)
        frozen.update(f"{head}{i}.{t}" for i in (1, 2) for t in ("w", "b"))
    if variant == "RSS_only":
        frozen.update(k for k in params if k.startswith("loc"))
    return params, frozenset(frozen)


def _affine(x, w, b):
    return x @ w + b


def _bn_forward(z, gamma, beta, run_mean, run_var, training):
    if training:
        mean = z.mean(axis=(0, 1))
        var = z.var(axis=(0, 1))
        new_mean = (1 - BN_MOMENTUM) * run_mean + BN_MOMENTUM * mean
        new_var = (1 - BN_MOMENTUM) * run_var + BN_MOMENTUM * var
    else:
        mean, var = run_mean, run_var
        new_mean, new_var = run_mean, run_var
    inv = 1.0 / np.sqrt(var + BN_EPS)
    xhat = (z - mean) * inv
    return gamma * xhat + beta, (xhat, inv, gamma), (new_mean, new_var)


def _bn_backward(dy, cache):
    xhat, inv, gamma = cache
    n = dy.shape[0] * dy.shape[1]
    dgamma = (dy * xhat).sum(axis=(0, 1))
    dbeta = dy.sum(axis=(0, 1))
    dxhat = dy * gamma
    dz = (inv / n) * (n * dxhat - dxhat.sum(axis=(0, 1))
                      - xhat * (dxhat * xhat).sum(axis=(0, 1)))
    return dz, dgamma, dbeta


def _branch_forward(x, params, state, prefix, n_layers, training):
    caches = []
    new_stats = {}
    for i in range(1, n_layers + 1):
        name = f"{prefix}{i}"
        z = _affine(x, params[f"{name}.w"], params[f"{name}.b"])
        y, bn_cache, (nm, nv) = _bn_forward(
            z, params[f"{name}.gamma"], params[f"{name}.beta"],
            state[f"{name}.mean"], state[f"{name}.var"], training)
        mask = y > 0
        caches.append((name, x, bn_cache, mask))
        new_stats[f"{name}.mean"] = nm
        new_stats[f"{name}.var"] = nv
        x = y * mask
    return x, caches, new_stats


def _branch_backward(dy, caches, params, grads):
    for name, x, bn_cache, mask in reversed(caches):
        dy = dy * mask
        dz, dgamma, dbeta = _bn_backward(dy, bn_cache)
        grads[f"{name}.gamma"] = dgamma
        grads[f"{name}.beta"] = dbeta
        grads[f"{name}.w"] = np.tensordot(x, dz, axes=([0, 1], [0, 1]))
        grads[f"{name}.b"] = dz.sum(axis=(0, 1))
        dy = dz @ params[f"{name}.w"].T
    return dy


def _head_forward(feat, params, head):
    z1 = _affine(feat, params[f"{head}1.w"], params[f"{head}1.b"])
    h1 = z1 * (z1 > 0)
    z2 = _affine(h1, params[f"{head}2.w"], params[f"{head}2.b"])
    omega = z2 * (z2 > 0)
    return omega, (feat, z1, h1, z2)


def _head_backward(domega, cache, params, grads, head):
    feat, z1, h1, z2 = cache
    dz2 = domega * (z2 > 0)
    grads[f"{head}2.w"] = np.tensordot(h1, dz2, axes=([0, 1], [0, 1]))
    grads[f"{head}2.b"] = dz2.sum(axis=(0, 1))
    dh1 = dz2 @ params[f"{head}2.w"].T
    dz1 = dh1 * (z1 > 0)
    grads[f"{head}1.w"] = np.tensordot(feat, dz1, axes=([0, 1], [0, 1]))
    grads[f"{head}1.b"] = dz1.sum(axis=(0, 1))
    return dz1 @ params[f"{head}1.w"].T


def _check_shapes(params, loc, rss):
    if loc.ndim != 3 or loc.shape[2] != LOCATION_SIZES[0]:
        raise ShapeMismatch(f"location tensor must be [B, iota, 5], got {loc.shape}")
    if rss.ndim != 4 or rss.shape[3] != 3:
        raise ShapeMismatch(f"rss tensor must be [B, iota, kappa, 3], got {rss.shape}")
    if rss.shape[:2] != loc.shape[:2]:
        raise ShapeMismatch(
            f"location {loc.shape} and rss {rss.shape} disagree on batch/iota")
    iota = params["reg.w"].shape[0] // FEATURES
    if loc.shape[1] != iota:
        raise ShapeMismatch(
            f"model was built for iota={iota}, input has {loc.shape[1]}")
    kappa = params["rss1.w"].shape[0] // 3
    if rss.shape[2] != kappa:
        raise ShapeMismatch(
            f"model was built for kappa={kappa}, input has {rss.shape[2]}")


def forward(params, state, loc, rss, training=False):
    """Predict RWC for a batch.

    Args:
        params/state: model parameters and batch-norm running stats.
        loc: [B, iota, 5] location features.
        rss: [B, iota, kappa, 3] RSS features.
        training: batch statistics when True, running stats when False.

    Returns:
        (pred [B], cache, new_state); new_state is state unchanged in
        eval mode, the momentum-updated running stats in training mode.
    """
    loc = np.asarray(loc, dtype=np.float64)
    rss = np.asarray(rss, dtype=np.float64)
    _check_shapes(params, loc, rss)
    b, iota = loc.shape[:2]
    rss_flat = rss.reshape(b, iota, -1)

    f_a, loc_caches, stats_a = _branch_forward(
        loc, params, state, "loc", len(LOCATION_SIZES) - 1, training)
    f_r, rss_caches, stats_r = _branch_forward(
        rss_flat, params, state, "rss", len(rss_sizes(1)) - 1, training)

    omega_a, head_a_cache = _head_forward(f_a, params, "head_a")
    omega_r, head_r_cache = _head_forward(f_r, params, "head_r")
    f_m = omega_a * f_a + omega_r * f_r

    flat = f_m.reshape(b, iota * FEATURES)
    pred = (flat @ params["reg.w"] + params["reg.b"])[:, 0]

    new_state = dict(state)
    new_state.update(stats_a)
    new_state.update(stats_r)
    cache = (loc_caches, rss_caches, head_a_cache, head_r_cache,
             f_a, f_r, omega_a, omega_r, flat)
    return pred, cache, new_state


def loss(pred, target):
    """Mean squared error over the batch."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"pred {pred.shape} vs target {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff))


def backward(params, cache, pred, target):
    """Analytic gradients of the MSE loss for every parameter."""
    (loc_caches, rss_caches, head_a_cache, head_r_cache,
     f_a, f_r, omega_a, omega_r, flat) = cache
    b, iota = f_a.shape[0], f_a.shape[1]

    dpred = (2.0 / b) * (pred - np.asarray(target, dtype=np.float64))
    grads = {}
    dpred2 = dpred[:, None]
    grads["reg.w"] = flat.T @ dpred2
    grads["reg.b"] = dpred2.sum(axis=0)
    df_m = (dpred2 @ params["reg.w"].T).reshape(b, iota, FEATURES)

    domega_a = (df_m * f_a).sum(axis=2, keepdims=True)
    domega_r = (df_m * f_r).sum(axis=2, keepdims=True)
    df_a = df_m * omega_a
    df_r = df_m * omega_r
    df_a = df_a + _head_backward(domega_a, head_a_cache, params, grads, "head_a")
    df_r = df_r + _head_backward(domega_r, head_r_cache, params, grads, "head_r")

    _branch_backward(df_a, loc_caches, params, grads)
    _branch_backward(df_r, rss_caches, params, grads)
    return grads


def loss_and_grads(params, state, loc, rss, target):
    """One training-mode pass: (loss, grads, new_state)."""
    pred, cache, new_state = forward(params, state, loc, rss, training=True)
    return loss(pred, target), backward(params, cache, pred, target), new_state


def _relu_signature(cache):
    loc_caches, rss_caches, head_a_cache, head_r_cache, *_ = cache
    masks = [m.ravel() for _, _, _, m in loc_caches + rss_caches]
    for _, z1, _, z2 in (head_a_cache, head_r_cache):
        masks.append((z1 > 0).ravel())
        masks.append((z2 > 0).ravel())
    return np.concatenate(masks)


def gradient_check(params, state, loc, rss, target, h=1e-4,
                   max_coords_per_tensor=24, seed=0):
    """Max relative error of analytic vs central-difference gradients.

    Every tensor is probed at up to max_coords_per_tensor seeded random
    coordinates (all coordinates for smaller tensors).  Relative error
    per coordinate is |a - n| / max(|a|, |n|, 1), the floor guarding
    coordinates whose gradient is legitimately tiny.

    A central difference only estimates a derivative where the loss is
    smooth on the probe interval.  Coordinates whose +-h perturbation
    flips any ReLU on or off are therefore excluded: across such a kink
    the two-point formula measures the average of two different linear
    pieces, not the gradient of either.  Flips are rare (a pre-activation
    must sit within about h of zero), so nearly all coordinates count.
    """
    _, grads, _ = loss_and_grads(params, state, loc, rss, target)
    rng = substream(seed, "gradcheck")
    worst = 0.0
    checked = 0
    for name in sorted(params):
        tensor = params[name]
        n = tensor.size
        coords = (np.arange(n) if n <= max_coords_per_tensor
                  else rng.choice(n, size=max_coords_per_tensor, replace=False))
        flat = tensor.reshape(-1)
        for c in coords:
            keep = flat[c]
            flat[c] = keep + h
            pred, cache, _ = forward(params, state, loc, rss, training=True)
            up, sig_up = loss(pred, target), _relu_signature(cache)
            flat[c] = keep - h
            pred, cache, _ = forward(params, state, loc, rss, training=True)
            down, sig_down = loss(pred, target), _relu_signature(cache)
            flat[c] = keep
            if not np.array_equal(sig_up, sig_down):
                continue
            numeric = (up - down) / (2.0 * h)
            analytic = grads[name].reshape(-1)[c]
            rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1.0)
            worst = max(worst, rel)
            checked += 1
    if checked == 0:
        raise ValueError("every probed coordinate crossed a ReLU boundary")
    return worst


def save_checkpoint(path, params, state, meta, opt_state=None):
    """Write params + running stats (float32) to an LFNN checkpoint.

    meta is a small JSON-able dict (iota, kappa, variant, ...).  When
    opt_state is given its moment tensors and step count are stored too.
    """
    tensors = {f"param.{k}": v for k, v in params.items()}
    tensors.update({f"state.{k}": v for k, v in state.items()})
    flags = 0
    meta = dict(meta)
    if opt_state is not None:
        flags |= 1
        meta["opt_t"] = opt_state["t"]
        tensors.update({f"opt.m.{k}": v for k, v in opt_state["m"].items()})
        tensors.update({f"opt.v.{k}": v for k, v in opt_state["v"].items()})
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()
    try:
        with open(path, "wb") as fh:
            fh.write(struct.pack("<4sHHI", _CHECKPOINT_MAGIC,
                                 _CHECKPOINT_VERSION, flags, len(blob)))
            fh.write(blob)
            fh.write(struct.pack("<I", len(tensors)))
            for name in sorted(tensors):
                arr = np.ascontiguousarray(tensors[name], dtype="<f4")
                raw = name.encode()
                fh.write(struct.pack("<H", len(raw)))
                fh.write(raw)
                fh.write(struct.pack("<B", arr.ndim))
                fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
                fh.write(arr.tobytes())
    except OSError as exc:
        raise IoError(f"writing {path}: {exc}") from exc


def load_checkpoint(path):
    """Read an LFNN checkpoint: (params, state, meta, opt_state | None)."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoError(f"reading {path}: {exc}") from exc
    if len(blob) < 12 or blob[:4] != _CHECKPOINT_MAGIC:
        raise BadMagic(f"{path} is not an LFNN checkpoint")
    _, version, flags, mlen = struct.unpack_from("<4sHHI", blob, 0)
    if version != _CHECKPOINT_VERSION:
        raise BadMagic(f"unsupported LFNN version {version}")
    offset = 12
    meta = json.loads(blob[offset:offset + mlen])
    offset += mlen
    (count,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    tensors = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        name = blob[offset:offset + nlen].decode()
        offset += nlen
        (ndim,) = struct.unpack_from("<B", blob, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}I", blob, offset)
        offset += 4 * ndim
        size = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(blob, dtype="<f4", count=size, offset=offset)
        offset += 4 * size
        tensors[name] = arr.reshape(shape).astype(np.float64)
    params = {k[6:]: v for k, v in tensors.items() if k.startswith("param.")}
    state = {k[6:]: v for k, v in tensors.items() if k.startswith("state.")}
    opt_state = None
    if flags & 1:
        opt_state = {
            "t": meta.pop("opt_t"),
            "m": {k[6:]: v for k, v in tensors.items() if k.startswith("opt.m.")},
            "v": {k[6:]: v for k, v in tensors.items() if k.startswith("opt.v.")},
        }
    return params, state, meta, opt_state
