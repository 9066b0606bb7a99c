"""Two-layer stochastic local search over k-point edge-weight laws.

The outer layer perturbs the probability vector (Gaussian steps on its
logits); the inner layer, for fixed probabilities, alternates multiplicative
perturbations of the values with a rescaling that puts the geometric mean of
the 0 and 45 degree time constants at 1.  Candidates are compared with
simulated-annealing acceptance.  Every evaluation uses the same seed, so two
candidates see the same underlying uniforms (common random numbers).
"""
from __future__ import annotations

import csv
import json
import math
import zlib
from dataclasses import asdict, dataclass, field

import numpy as np

from .distributions import KPointDistribution
from .percolation import directional_stretch


@dataclass
class SearchConfig:
    k: int = 2
    outer_iters: int = 6
    inner_iters: int = 6
    prob_step: float = 0.3
    value_step: float = 0.25
    eval_n: int = 300
    eval_trials: int = 4
    eval_angles: int = 9
    seed: int = 0
    temperature: float = 0.01
    cooling: float = 0.85
    full_every: int = 10
    restart_values: bool = False
    workers: int = 1

    def __post_init__(self):
        if min(self.outer_iters, self.inner_iters, self.eval_n, self.eval_trials) < 1:
            raise ValueError("budgets and evaluation sizes must be >= 1")
        if self.eval_angles < 2:
            raise ValueError("eval_angles must be >= 2")
        if not (self.prob_step > 0 and self.value_step > 0):
            raise ValueError("perturbation steps must be positive")
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass
class Evaluation:
    objective: float
    stderr: float
    mu0: float
    mu45: float


@dataclass
class SearchResult:
    best: KPointDistribution
    objective: float
    stderr: float
    history: list = field(default_factory=list)
    config: SearchConfig | None = None

    def to_csv(self, path):
        k = self.best.k
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "stage", "objective", "best_objective", "accepted"]
                       + [f"p{i}" for i in range(1, k + 1)] + [f"x{i}" for i in range(1, k + 1)])
            for h in self.history:
                w.writerow([h["iter"], h["stage"], repr(h["objective"]), repr(h["best_objective"]),
                            int(h["accepted"])] + [repr(p) for p in h["p"]] + [repr(x) for x in h["x"]])

    def to_dict(self) -> dict:
        return {"probs": list(self.best.probs), "values": list(self.best.values),
                "objective": self.objective, "stderr": self.stderr,
                "config": asdict(self.config) if self.config else None}

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def normalize_values(dist: KPointDistribution, mu0: float, mu45: float) -> KPointDistribution:
    """Scale every value by ``1 / sqrt(mu0 * mu45)``; probabilities are untouched."""
    if not (mu0 > 0 and mu45 > 0):
        raise ValueError(f"time constants must be positive, got {mu0}, {mu45}")
    return dist.scaled(1.0 / math.sqrt(mu0 * mu45))


def evaluate(dist, config: SearchConfig, full: bool = True) -> Evaluation:
    """Max over the angle grid of ``|mu_theta / sqrt(mu_0 mu_45) - 1|``.

    With ``full=False`` only the 0 and 45 degree directions are simulated.
    The objective does not depend on the overall scale of the values.
    """
    angles = None if full else np.array([0.0, math.pi / 4])
    prof = directional_stretch(dist, config.eval_n, angle_count=config.eval_angles,
                               trials=config.eval_trials, seed=config.seed, angles=angles,
                               workers=config.workers)
    g = math.sqrt(prof.mu0() * prof.mu45())
    dev = np.abs(prof.mu / g - 1.0)
    i = int(np.argmax(dev))
    se = float(prof.stderr[i] / g) if prof.trials > 1 else float("nan")
    return Evaluation(float(dev[i]), se, prof.mu0(), prof.mu45())


def _rng(seed):
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(zlib.crc32(b"optimize"),)))


def _perturb_probs(p, step, rng):
    logit = np.log(np.maximum(np.asarray(p), 1e-300)) + rng.normal(0.0, step, len(p))
    q = np.exp(logit - logit.max())
    q /= q.sum()
    q[-1] = 1.0 - q[:-1].sum()
    return q if (q >= 0).all() else np.abs(q) / np.abs(q).sum()


def _accept(new, cur, temp, rng) -> bool:
    if new <= cur:
        return True
    return temp > 0 and rng.random() < math.exp(-(new - cur) / temp)


def local_search(config: SearchConfig, init: KPointDistribution | None = None) -> SearchResult:
    """Simulated-annealing version of the two-layer search; returns the best law seen."""
    rng = _rng(config.seed)
    if init is None:
        p0 = np.full(config.k, 1.0 / config.k)
        x0 = np.exp(rng.normal(0.0, 1.0, config.k))
        init = KPointDistribution(tuple(p0), tuple(x0))
    elif init.k != config.k:
        raise ValueError(f"initial law has {init.k} points, config.k = {config.k}")

    cur_ev = evaluate(init, config, full=False)
    cur = normalize_values(init, cur_ev.mu0, cur_ev.mu45)
    full_ev = evaluate(cur, config)
    best, best_obj, best_se = cur, full_ev.objective, full_ev.stderr
    cur_full = full_ev.objective
    history = [dict(iter=0, stage="init", objective=full_ev.objective, best_objective=best_obj,
                    accepted=True, p=list(cur.probs), x=list(cur.values))]
    accepted_moves = 0
    step = 0
    for outer in range(config.outer_iters):
        temp = config.temperature * config.cooling ** outer
        # outer: new probabilities
        if config.k > 1 and outer > 0:
            probs = _perturb_probs(cur.probs, config.prob_step, rng)
        else:
            probs = np.asarray(cur.probs)
        if config.restart_values:
            vals = np.exp(rng.normal(0.0, 1.0, config.k))
        else:
            vals = np.asarray(cur.values)
        cand = KPointDistribution(tuple(probs), tuple(vals))
        ev = evaluate(cand, config, full=False)
        cand = normalize_values(cand, ev.mu0, ev.mu45)
        inner_obj = ev.objective
        # inner: values only, cheap two-direction objective
        for _ in range(config.inner_iters):
            step += 1
            trial = KPointDistribution(cand.probs, tuple(np.asarray(cand.values)
                                                        * np.exp(rng.normal(0.0, config.value_step, config.k))))
            tev = evaluate(trial, config, full=False)
            ok = _accept(tev.objective, inner_obj, temp, rng)
            if ok:
                cand = normalize_values(trial, tev.mu0, tev.mu45)
                inner_obj = tev.objective
                accepted_moves += 1
            history.append(dict(iter=step, stage="inner", objective=tev.objective, best_objective=best_obj,
                                accepted=ok, p=list(trial.probs), x=list(trial.values)))
            if ok and accepted_moves % config.full_every == 0:
                fev = evaluate(cand, config)
                if fev.objective < best_obj:
                    best, best_obj, best_se = cand, fev.objective, fev.stderr
        # outer acceptance on the full angle grid
        fev = evaluate(cand, config)
        step += 1
        ok = _accept(fev.objective, cur_full, temp, rng)
        if ok:
            cur, cur_full = cand, fev.objective
        if fev.objective < best_obj:
            best, best_obj, best_se = cand, fev.objective, fev.stderr
        history.append(dict(iter=step, stage="outer", objective=fev.objective, best_objective=best_obj,
                            accepted=ok, p=list(cand.probs), x=list(cand.values)))
    return SearchResult(best, best_obj, best_se, history, config)
