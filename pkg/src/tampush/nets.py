"""Small dense networks with hand-written backprop, in float64.

Everything the learners need: parameter sets with a flat view, an MLP with
tanh hidden layers, a vanilla recurrent cell unrolled over windows, the
Adam update, and central-difference gradient checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ParamSet:
    """Ordered name -> array mapping with a flat vector view."""

    def __init__(self, arrays: dict):
        self._arrays = dict(arrays)
        for v in self._arrays.values():
            if not np.all(np.isfinite(v)):
                raise ValueError("non-finite parameter value")

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __setitem__(self, name: str, value: np.ndarray):
        assert name in self._arrays and self._arrays[name].shape == value.shape
        self._arrays[name] = value

    def names(self):
        return list(self._arrays)

    def items(self):
        return self._arrays.items()

    def flat(self) -> np.ndarray:
        return np.concatenate([self._arrays[n].ravel() for n in self._arrays])

    def assign_flat(self, vec: np.ndarray):
        i = 0
        for n, a in self._arrays.items():
            k = a.size
            self._arrays[n] = vec[i : i + k].reshape(a.shape).copy()
            i += k
        assert i == vec.size

    def copy(self) -> "ParamSet":
        return ParamSet({n: a.copy() for n, a in self._arrays.items()})

    def zeros_like(self) -> dict:
        return {n: np.zeros_like(a) for n, a in self._arrays.items()}

    @property
    def size(self) -> int:
        return sum(a.size for a in self._arrays.values())


def _dense(rng, n_in, n_out, scale=1.0):
    return rng.normal(0.0, scale / math.sqrt(n_in), size=(n_in, n_out))


class MLP:
    """Dense net with tanh hidden layers and a linear head."""

    def __init__(self, sizes, rng=None, params: ParamSet | None = None):
        self.sizes = tuple(sizes)
        if params is not None:
            self.params = params
            return
        arrays = {}
        for i in range(len(sizes) - 1):
            arrays[f"W{i}"] = _dense(rng, sizes[i], sizes[i + 1])
            arrays[f"b{i}"] = np.zeros(sizes[i + 1])
        self.params = ParamSet(arrays)

    @property
    def n_layers(self):
        return len(self.sizes) - 1

    def forward(self, x):
        """x: (B, in) -> (y, cache)."""
        acts = [np.asarray(x, dtype=float)]
        h = acts[0]
        for i in range(self.n_layers):
            z = h @ self.params[f"W{i}"] + self.params[f"b{i}"]
            h = np.tanh(z) if i < self.n_layers - 1 else z
            acts.append(h)
        return h, acts

    def backward(self, cache, dy):
        """Gradients of all parameters plus the input gradient."""
        acts = cache
        grads = {}
        delta = np.asarray(dy, dtype=float)
        for i in range(self.n_layers - 1, -1, -1):
            if i < self.n_layers - 1:
                delta = delta * (1.0 - acts[i + 1] ** 2)
            grads[f"W{i}"] = acts[i].T @ delta
            grads[f"b{i}"] = delta.sum(axis=0)
            delta = delta @ self.params[f"W{i}"].T
        return grads, delta

    def __call__(self, x):
        return self.forward(x)[0]


class RNN:
    """Vanilla tanh recurrent cell with a linear readout."""

    def __init__(self, n_in, n_hidden, n_out, rng=None, params: ParamSet | None = None):
        self.n_in, self.n_hidden, self.n_out = n_in, n_hidden, n_out
        if params is not None:
            self.params = params
            return
        self.params = ParamSet(
            {
                "Wxh": _dense(rng, n_in, n_hidden),
                "Whh": _dense(rng, n_hidden, n_hidden),
                "bh": np.zeros(n_hidden),
                "Why": _dense(rng, n_hidden, n_out),
                "by": np.zeros(n_out),
            }
        )

    def step(self, x, h):
        h_new = np.tanh(x @ self.params["Wxh"] + h @ self.params["Whh"] + self.params["bh"])
        y = h_new @ self.params["Why"] + self.params["by"]
        return y, h_new

    def forward(self, x, h0=None):
        """x: (B, T, in) -> (y (B, T, out), hs, cache)."""
        B, T, _ = x.shape
        h = np.zeros((B, self.n_hidden)) if h0 is None else h0
        hs = np.empty((B, T, self.n_hidden))
        ys = np.empty((B, T, self.n_out))
        prev = np.empty((B, T, self.n_hidden))
        for t in range(T):
            prev[:, t] = h
            h = np.tanh(
                x[:, t] @ self.params["Wxh"] + h @ self.params["Whh"] + self.params["bh"]
            )
            hs[:, t] = h
            ys[:, t] = h @ self.params["Why"] + self.params["by"]
        return ys, (x, prev, hs)

    def backward(self, cache, dy):
        """Backprop through time over the window."""
        x, prev, hs = cache
        B, T, _ = x.shape
        g = {n: np.zeros_like(a) for n, a in self.params.items()}
        dh_next = np.zeros((B, self.n_hidden))
        for t in range(T - 1, -1, -1):
            dyt = dy[:, t]
            g["Why"] += hs[:, t].T @ dyt
            g["by"] += dyt.sum(axis=0)
            dh = dyt @ self.params["Why"].T + dh_next
            dz = dh * (1.0 - hs[:, t] ** 2)
            g["Wxh"] += x[:, t].T @ dz
            g["Whh"] += prev[:, t].T @ dz
            g["bh"] += dz.sum(axis=0)
            dh_next = dz @ self.params["Whh"].T
        return g, dh_next


class Adam:
    """Adaptive moment estimation with the standard defaults."""

    def __init__(self, params: ParamSet, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = params.zeros_like()
        self.v = params.zeros_like()
        self.t = 0

    def step(self, grads: dict):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        corr1 = 1.0 - b1**self.t
        corr2 = 1.0 - b2**self.t
        for n, a in self.params.items():
            g = grads[n]
            self.m[n] = b1 * self.m[n] + (1 - b1) * g
            self.v[n] = b2 * self.v[n] + (1 - b2) * g * g
            mhat = self.m[n] / corr1
            vhat = self.v[n] / corr2
            self.params[n] = a - self.lr * mhat / (np.sqrt(vhat) + self.eps)


class TrainingDiverged(RuntimeError):
    def __init__(self, batch_id):
        super().__init__(f"non-finite loss at batch {batch_id}")
        self.batch_id = batch_id


def grad_check(loss_and_grads, params: ParamSet, h: float = 1e-5, rng=None,
               max_checks: int | None = None) -> float:
    """Max relative error between analytic and central-difference gradients.

    loss_and_grads() -> (loss, grads dict) evaluated at the current params.
    For large nets a seeded random subset of at least 200 coordinates is
    checked when max_checks is set.
    """
    assert h > 0
    _, grads = loss_and_grads()
    analytic = np.concatenate([grads[n].ravel() for n in params.names()])
    flat = params.flat()
    n = flat.size
    if max_checks is not None and n > max_checks:
        assert max_checks >= 200
        rng = np.random.default_rng(0) if rng is None else rng
        idx = rng.choice(n, size=max_checks, replace=False)
    else:
        idx = np.arange(n)
    worst = 0.0
    for i in idx:
        orig = flat[i]
        flat[i] = orig + h
        params.assign_flat(flat)
        lo_plus, _ = loss_and_grads()
        flat[i] = orig - h
        params.assign_flat(flat)
        lo_minus, _ = loss_and_grads()
        flat[i] = orig
        numeric = (lo_plus - lo_minus) / (2.0 * h)
        err = abs(analytic[i] - numeric) / max(abs(analytic[i]) + abs(numeric), 1e-8)
        worst = max(worst, err)
    params.assign_flat(flat)
    return worst
