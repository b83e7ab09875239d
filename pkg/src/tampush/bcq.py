"""Batch-constrained offline Q-learning over the demonstration corpus.

Twin Q-networks with soft-updated targets, a conditional latent-variable
action generator (encode (s,a) to a latent, decode (s,z) back to an
action, standard-normal divergence penalty), and a bounded perturbation
network.  Action selection decodes a handful of candidate actions near the
data, perturbs each within the bound, and takes the argmax under Q1, which
keeps the maximization on actions resembling the dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import config
from .dataset import ACT_DIM, GOAL_DIM, OBS_DIM, Dataset
from .gcbc import Checkpoint, TrainResult
from .nets import MLP, Adam, ParamSet, TrainingDiverged

ACTION_BOUND = config.MAX_JOINT_DELTA
S_DIM = OBS_DIM + GOAL_DIM
LATENT_DIM = 2 * ACT_DIM


@dataclass
class BCQConfig:
    epochs: int = 2000
    checkpoint_every: int = 50
    batch_size: int = 100
    lr: float = 1e-3
    seed: int = 0
    gamma: float = 0.99
    hidden: tuple = (64, 64)
    lam: float = 0.75  # min/max mixing of the twin targets
    n_action_samples: int = 10
    phi: float = 0.05  # perturbation bound, action units
    tau: float = 0.005  # target soft-update rate

    def __post_init__(self):
        assert self.epochs % self.checkpoint_every == 0


def _mlp(rng, sizes):
    return MLP(sizes, rng=rng)


class BCQPolicy:
    kind = "bcq"

    def __init__(self, nets: dict, cfg_values: dict, act_seed: int = 0):
        self.q1 = nets["q1"]
        self.q2 = nets["q2"]
        self.q1_t = nets["q1_t"]
        self.q2_t = nets["q2_t"]
        self.enc = nets["enc"]
        self.dec = nets["dec"]
        self.pert = nets["pert"]
        self.pert_t = nets["pert_t"]
        self.cfg_values = cfg_values
        self.act_seed = act_seed
        self._rng = np.random.default_rng(act_seed)

    # -- acting ----------------------------------------------------------------

    def reset(self):
        self._rng = np.random.default_rng(self.act_seed)
        return None

    def candidates(self, s_row: np.ndarray):
        """Generator samples plus bounded perturbations for one state."""
        n = self.cfg_values["n_action_samples"]
        phi = self.cfg_values["phi"]
        S = np.tile(s_row, (n, 1))
        z = np.clip(self._rng.standard_normal((n, LATENT_DIM)), -0.5, 0.5)
        raw = self.dec(np.hstack([S, z]))
        base = np.clip(raw, -ACTION_BOUND, ACTION_BOUND)
        bump = phi * np.tanh(self.pert(np.hstack([S, base])))
        acts = np.clip(base + bump, -ACTION_BOUND, ACTION_BOUND)
        return S, base, acts

    def act(self, obs, goal, hidden=None):
        s = np.concatenate([obs, goal])
        S, _, acts = self.candidates(s)
        q = self.q1(np.hstack([S, acts]))[:, 0]
        return acts[int(np.argmax(q))], None

    # -- persistence -------------------------------------------------------------

    def spec(self) -> dict:
        return {
            "kind": self.kind,
            "s_dim": S_DIM,
            "act_dim": ACT_DIM,
            "hidden": list(self.q1.sizes[1:-1]),
            "values": dict(self.cfg_values),
            "act_seed": self.act_seed,
        }

    def state_arrays(self) -> dict:
        out = {}
        for tag, net in self._nets().items():
            for n, a in net.params.items():
                out[f"{tag}/{n}"] = a.copy()
        return out

    def _nets(self) -> dict:
        return {
            "q1": self.q1, "q2": self.q2, "q1_t": self.q1_t, "q2_t": self.q2_t,
            "enc": self.enc, "dec": self.dec, "pert": self.pert, "pert_t": self.pert_t,
        }

    @classmethod
    def from_arrays(cls, spec: dict, arrays: dict):
        hidden = tuple(spec["hidden"])
        sizes = {
            "q1": (S_DIM + ACT_DIM, *hidden, 1),
            "q2": (S_DIM + ACT_DIM, *hidden, 1),
            "q1_t": (S_DIM + ACT_DIM, *hidden, 1),
            "q2_t": (S_DIM + ACT_DIM, *hidden, 1),
            "enc": (S_DIM + ACT_DIM, *hidden, 2 * LATENT_DIM),
            "dec": (S_DIM + LATENT_DIM, *hidden, ACT_DIM),
            "pert": (S_DIM + ACT_DIM, *hidden, ACT_DIM),
            "pert_t": (S_DIM + ACT_DIM, *hidden, ACT_DIM),
        }
        nets = {}
        for tag, sz in sizes.items():
            sub = {
                n.split("/", 1)[1]: arrays[n].copy()
                for n in arrays
                if n.startswith(tag + "/")
            }
            nets[tag] = MLP(sz, params=ParamSet(sub))
        return cls(nets, dict(spec["values"]), act_seed=spec.get("act_seed", 0))


def _new_policy(cfg: BCQConfig, rng) -> BCQPolicy:
    hidden = cfg.hidden
    nets = {
        "q1": _mlp(rng, (S_DIM + ACT_DIM, *hidden, 1)),
        "q2": _mlp(rng, (S_DIM + ACT_DIM, *hidden, 1)),
        "enc": _mlp(rng, (S_DIM + ACT_DIM, *hidden, 2 * LATENT_DIM)),
        "dec": _mlp(rng, (S_DIM + LATENT_DIM, *hidden, ACT_DIM)),
        "pert": _mlp(rng, (S_DIM + ACT_DIM, *hidden, ACT_DIM)),
    }
    nets["q1_t"] = MLP(nets["q1"].sizes, params=nets["q1"].params.copy())
    nets["q2_t"] = MLP(nets["q2"].sizes, params=nets["q2"].params.copy())
    nets["pert_t"] = MLP(nets["pert"].sizes, params=nets["pert"].params.copy())
    values = {
        "lam": cfg.lam,
        "n_action_samples": cfg.n_action_samples,
        "phi": cfg.phi,
        "gamma": cfg.gamma,
    }
    return BCQPolicy(nets, values, act_seed=cfg.seed)


def target_values(policy: BCQPolicy, s2: np.ndarray, lam: float, n: int, phi: float, rng):
    """Bootstrap value of next states: sample n generator actions, perturb
    within phi via the target perturbation net, mix the twin targets by
    lam*min + (1-lam)*max, and take the best candidate per state."""
    B = s2.shape[0]
    S = np.repeat(s2, n, axis=0)
    z = np.clip(rng.standard_normal((B * n, LATENT_DIM)), -0.5, 0.5)
    base = np.clip(policy.dec(np.hstack([S, z])), -ACTION_BOUND, ACTION_BOUND)
    bump = phi * np.tanh(policy.pert_t(np.hstack([S, base])))
    acts = np.clip(base + bump, -ACTION_BOUND, ACTION_BOUND)
    sa = np.hstack([S, acts])
    q1 = policy.q1_t(sa)[:, 0]
    q2 = policy.q2_t(sa)[:, 0]
    mixed = lam * np.minimum(q1, q2) + (1.0 - lam) * np.maximum(q1, q2)
    return mixed.reshape(B, n).max(axis=1)


def vae_loss_and_grads(policy: BCQPolicy, s, a, rng):
    """Reconstruction plus standard-normal divergence; returns grads for the
    encoder and decoder."""
    B = s.shape[0]
    enc_in = np.hstack([s, a])
    stats, enc_cache = policy.enc.forward(enc_in)
    mu, logstd = stats[:, :LATENT_DIM], np.clip(stats[:, LATENT_DIM:], -4.0, 4.0)
    std = np.exp(logstd)
    eps = rng.standard_normal(mu.shape)
    z = mu + std * eps
    dec_in = np.hstack([s, z])
    recon, dec_cache = policy.dec.forward(dec_in)
    diff = recon - a
    recon_loss = float((diff**2).mean())
    kl = float(0.5 * np.mean(np.sum(mu**2 + std**2 - 2.0 * logstd - 1.0, axis=1)))
    loss = recon_loss + 0.5 * kl

    d_recon = 2.0 * diff / diff.size
    dec_grads, d_dec_in = policy.dec.backward(dec_cache, d_recon)
    dz = d_dec_in[:, S_DIM:]
    dmu = dz + 0.5 * mu / B
    dstd = dz * eps + 0.5 * std / B
    dlogstd = dstd * std - 0.5 / B
    # clip boundary: gradient through the clip is zero outside the range
    raw = stats[:, LATENT_DIM:]
    dlogstd = np.where((raw > -4.0) & (raw < 4.0), dlogstd, 0.0)
    dstats = np.hstack([dmu, dlogstd])
    enc_grads, _ = policy.enc.backward(enc_cache, dstats)
    return loss, enc_grads, dec_grads


def critic_loss_and_grads(policy: BCQPolicy, s, a, y):
    sa = np.hstack([s, a])
    q1, c1 = policy.q1.forward(sa)
    q2, c2 = policy.q2.forward(sa)
    d1 = q1[:, 0] - y
    d2 = q2[:, 0] - y
    loss = float((d1**2).mean() + (d2**2).mean())
    g1, _ = policy.q1.backward(c1, (2.0 * d1 / d1.size)[:, None])
    g2, _ = policy.q2.backward(c2, (2.0 * d2 / d2.size)[:, None])
    return loss, g1, g2


def actor_loss_and_grads(policy: BCQPolicy, s, rng, phi: float):
    """Ascend Q1 through the perturbation applied to generator samples."""
    B = s.shape[0]
    z = np.clip(rng.standard_normal((B, LATENT_DIM)), -0.5, 0.5)
    base = np.clip(policy.dec(np.hstack([s, z])), -ACTION_BOUND, ACTION_BOUND)
    pert_in = np.hstack([s, base])
    raw, pert_cache = policy.pert.forward(pert_in)
    tanh_raw = np.tanh(raw)
    acts = base + phi * tanh_raw
    q, q_cache = policy.q1.forward(np.hstack([s, acts]))
    loss = float(-q.mean())
    _, d_sa = policy.q1.backward(q_cache, np.full((B, 1), -1.0 / B))
    d_act = d_sa[:, S_DIM:]
    d_raw = d_act * phi * (1.0 - tanh_raw**2)
    pert_grads, _ = policy.pert.backward(pert_cache, d_raw)
    return loss, pert_grads


def _soft_update(target: MLP, online: MLP, tau: float):
    for n, a in target.params.items():
        target.params[n] = (1.0 - tau) * a + tau * online.params[n]


def train_bcq(dataset: Dataset, cfg: BCQConfig, log=None) -> TrainResult:
    """Offline training loop; per batch the generator reconstructs dataset
    actions, the twin critics regress to the mixed bootstrapped target, the
    perturbation net ascends Q1, and targets soft-update."""
    train_ids, val_ids = dataset.split_ids()
    tr = dataset.transitions(train_ids)
    va = dataset.transitions(val_ids)
    s = np.hstack([tr.obs, tr.goal])
    s2 = np.hstack([tr.next_obs, tr.goal])
    a, r, done = tr.act, tr.reward, tr.done
    vs = np.hstack([va.obs, va.goal])
    vs2 = np.hstack([va.next_obs, va.goal])

    rng = np.random.default_rng(cfg.seed)
    policy = _new_policy(cfg, rng)
    opt_q1 = Adam(policy.q1.params, lr=cfg.lr)
    opt_q2 = Adam(policy.q2.params, lr=cfg.lr)
    opt_enc = Adam(policy.enc.params, lr=cfg.lr)
    opt_dec = Adam(policy.dec.params, lr=cfg.lr)
    opt_pert = Adam(policy.pert.params, lr=cfg.lr)

    n = s.shape[0]
    assert n > 0, "empty training split"
    result = TrainResult()
    batch_id = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        tot_v = tot_c = 0.0
        count = 0
        for off in range(0, n, cfg.batch_size):
            idx = order[off : off + cfg.batch_size]
            bs, ba = s[idx], a[idx]
            v_loss, enc_g, dec_g = vae_loss_and_grads(policy, bs, ba, rng)
            opt_enc.step(enc_g)
            opt_dec.step(dec_g)
            y = r[idx] + cfg.gamma * (1.0 - done[idx]) * target_values(
                policy, s2[idx], cfg.lam, cfg.n_action_samples, cfg.phi, rng
            )
            c_loss, g1, g2 = critic_loss_and_grads(policy, bs, ba, y)
            opt_q1.step(g1)
            opt_q2.step(g2)
            _, pert_g = actor_loss_and_grads(policy, bs, rng, cfg.phi)
            opt_pert.step(pert_g)
            _soft_update(policy.q1_t, policy.q1, cfg.tau)
            _soft_update(policy.q2_t, policy.q2, cfg.tau)
            _soft_update(policy.pert_t, policy.pert, cfg.tau)
            if not (np.isfinite(v_loss) and np.isfinite(c_loss)):
                raise TrainingDiverged(batch_id)
            tot_v += v_loss * idx.size
            tot_c += c_loss * idx.size
            count += idx.size
            batch_id += 1
        val_loss = _val_critic_loss(policy, vs, va.act, va.reward, va.done, vs2, cfg)
        result.history.append((epoch, tot_c / count, val_loss))
        if log is not None:
            log(
                f"epoch {epoch}\tcritic {tot_c / count:.6e}\tvae {tot_v / count:.6e}"
                f"\tval {val_loss:.6e}"
            )
        if epoch % cfg.checkpoint_every == 0:
            spec = policy.spec()
            spec["epoch"] = epoch
            spec["train_seed"] = cfg.seed
            result.checkpoints.append(Checkpoint(epoch, spec, policy.state_arrays()))
    return result


def _val_critic_loss(policy, vs, va_act, va_r, va_done, vs2, cfg: BCQConfig):
    if vs.shape[0] == 0:
        return float("nan")
    rng = np.random.default_rng(9)
    y = va_r + cfg.gamma * (1.0 - va_done) * target_values(
        policy, vs2, cfg.lam, cfg.n_action_samples, cfg.phi, rng
    )
    q1 = policy.q1(np.hstack([vs, va_act]))[:, 0]
    return float(((q1 - y) ** 2).mean())
