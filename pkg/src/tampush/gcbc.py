"""Goal-conditioned behavioral cloning, feedforward and recurrent.

Policies regress (observation ++ relabeled goal) -> action with mean
squared error.  The recurrent variant trains on length-10 windows with the
hidden state carried within a window; at rollout time the hidden state is
carried across the whole episode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import config
from .dataset import ACT_DIM, GOAL_DIM, OBS_DIM, Dataset
from .nets import MLP, RNN, Adam, ParamSet, TrainingDiverged

ACTION_BOUND = config.MAX_JOINT_DELTA
IN_DIM = OBS_DIM + GOAL_DIM


@dataclass
class TrainConfig:
    epochs: int = 2000
    checkpoint_every: int = 50
    batch_size: int = 100
    lr: float = 1e-3
    seed: int = 0
    gamma: float = 0.99
    hidden: tuple = (64, 64)
    window: int = 10

    def __post_init__(self):
        assert self.epochs % self.checkpoint_every == 0, (
            "checkpoint cadence must divide the epoch count"
        )


@dataclass
class Checkpoint:
    epoch: int
    spec: dict
    arrays: dict


@dataclass
class TrainResult:
    checkpoints: list = field(default_factory=list)
    history: list = field(default_factory=list)  # (epoch, train loss, val loss)

    @property
    def final(self) -> Checkpoint:
        return self.checkpoints[-1]


class GCBCPolicy:
    kind = "gcbc"

    def __init__(self, mlp: MLP):
        self.mlp = mlp

    def reset(self):
        return None

    def act(self, obs, goal, hidden=None):
        x = np.concatenate([obs, goal])[None, :]
        y = self.mlp(x)[0]
        return np.clip(y, -ACTION_BOUND, ACTION_BOUND), None

    def spec(self) -> dict:
        return {"kind": self.kind, "sizes": list(self.mlp.sizes)}

    def state_arrays(self) -> dict:
        return {n: a.copy() for n, a in self.mlp.params.items()}

    @classmethod
    def from_arrays(cls, spec: dict, arrays: dict):
        mlp = MLP(tuple(spec["sizes"]), params=ParamSet(arrays))
        return cls(mlp)


class GCBCRecurrentPolicy:
    kind = "gcbc-rnn"

    def __init__(self, rnn: RNN):
        self.rnn = rnn

    def reset(self):
        return np.zeros((1, self.rnn.n_hidden))

    def act(self, obs, goal, hidden):
        x = np.concatenate([obs, goal])[None, :]
        y, h = self.rnn.step(x, hidden)
        return np.clip(y[0], -ACTION_BOUND, ACTION_BOUND), h

    def spec(self) -> dict:
        return {
            "kind": self.kind,
            "n_in": self.rnn.n_in,
            "n_hidden": self.rnn.n_hidden,
            "n_out": self.rnn.n_out,
        }

    def state_arrays(self) -> dict:
        return {n: a.copy() for n, a in self.rnn.params.items()}

    @classmethod
    def from_arrays(cls, spec: dict, arrays: dict):
        rnn = RNN(spec["n_in"], spec["n_hidden"], spec["n_out"], params=ParamSet(arrays))
        return cls(rnn)


def _xy_arrays(dataset: Dataset, record_ids):
    tr = dataset.transitions(record_ids)
    x = np.hstack([tr.obs, tr.goal])
    y = tr.act
    return x, y


def _window_arrays(dataset: Dataset, record_ids, window: int):
    """Length-`window` training windows; records shorter than the window are
    front-padded with their first observation and a zeroed loss mask."""
    xs, ys, ms = [], [], []
    for i in record_ids:
        r = dataset.records[i]
        T = len(r)
        if T == 0:
            continue
        x_full = np.hstack(
            [r.trajectory.observations[:T], np.tile(r.relabeled_goal, (T, 1))]
        )
        y_full = r.trajectory.actions
        if T >= window:
            for s in range(T - window + 1):
                xs.append(x_full[s : s + window])
                ys.append(y_full[s : s + window])
                ms.append(np.ones(window))
        else:
            pad = window - T
            xs.append(np.vstack([np.tile(x_full[0], (pad, 1)), x_full]))
            ys.append(np.vstack([np.zeros((pad, ACT_DIM)), y_full]))
            m = np.zeros(window)
            m[pad:] = 1.0
            ms.append(m)
    return np.array(xs), np.array(ys), np.array(ms)


def train_gcbc(dataset: Dataset, cfg: TrainConfig, recurrent: bool = False,
               log=None) -> TrainResult:
    """Supervised regression on relabeled demonstrations.

    Deterministic per (dataset, config, seed): identical runs produce
    identical checkpoints.
    """
    train_ids, val_ids = dataset.split_ids()
    rng = np.random.default_rng(cfg.seed)
    result = TrainResult()
    if recurrent:
        policy = GCBCRecurrentPolicy(RNN(IN_DIM, cfg.hidden[0], ACT_DIM, rng=rng))
        xw, yw, mw = _window_arrays(dataset, train_ids, cfg.window)
        xv, yv, mv = _window_arrays(dataset, val_ids, cfg.window)
        params = policy.rnn.params
    else:
        policy = GCBCPolicy(MLP((IN_DIM, *cfg.hidden, ACT_DIM), rng=rng))
        xw, yw = _xy_arrays(dataset, train_ids)
        xv, yv = _xy_arrays(dataset, val_ids)
        params = policy.mlp.params
    n = xw.shape[0]
    assert n > 0, "empty training split"
    opt = Adam(params, lr=cfg.lr)
    batch_id = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, cfg.batch_size):
            idx = order[s : s + cfg.batch_size]
            if recurrent:
                pred, cache = policy.rnn.forward(xw[idx])
                diff = (pred - yw[idx]) * mw[idx][:, :, None]
                denom = mw[idx].sum() * ACT_DIM
                loss = float((diff**2).sum() / denom)
                grads, _ = policy.rnn.backward(cache, 2.0 * diff / denom)
            else:
                pred, cache = policy.mlp.forward(xw[idx])
                diff = pred - yw[idx]
                loss = float((diff**2).mean())
                grads, _ = policy.mlp.backward(cache, 2.0 * diff / diff.size)
            if not np.isfinite(loss):
                raise TrainingDiverged(batch_id)
            opt.step(grads)
            total += loss * idx.size
            batch_id += 1
        train_loss = total / n
        val_loss = _eval_loss(policy, recurrent, xv, yv, mv if recurrent else None)
        result.history.append((epoch, train_loss, val_loss))
        if log is not None:
            log(f"epoch {epoch}\ttrain {train_loss:.6e}\tval {val_loss:.6e}")
        if epoch % cfg.checkpoint_every == 0:
            spec = policy.spec()
            spec["epoch"] = epoch
            spec["train_seed"] = cfg.seed
            result.checkpoints.append(Checkpoint(epoch, spec, policy.state_arrays()))
    return result


def _eval_loss(policy, recurrent, xv, yv, mv):
    if xv.shape[0] == 0:
        return float("nan")
    if recurrent:
        pred, _ = policy.rnn.forward(xv)
        diff = (pred - yv) * mv[:, :, None]
        return float((diff**2).sum() / (mv.sum() * ACT_DIM))
    pred, _ = policy.mlp.forward(xv)
    return float(((pred - yv) ** 2).mean())
