"""Experiment orchestration: seeded trial loops, space metering, statistics.

Every trial draws its generator from a counter-split of the root seed, so
reports are reproducible from (experiment, seed) and trials are independent of
execution order.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import NormalDist
from typing import Callable, Dict, List, Optional

from . import promise as promise_mod
from . import triangles as tri_mod


class SpaceMeter:
    """Running bit count of tracked algorithm state, with peak."""

    def __init__(self):
        self.current = 0
        self.peak = 0

    def observe(self, bits: int) -> None:
        self.current = bits
        if bits > self.peak:
            self.peak = bits


def trial_seed(root_seed: int, index: int) -> int:
    """Counter-based split of the root seed; order-independent across trials."""
    digest = hashlib.sha256(f"{root_seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def trial_rng(root_seed: int, index: int) -> random.Random:
    return random.Random(trial_seed(root_seed, index))


def wilson_interval(successes: int, trials: int, level: float = 0.95):
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("need at least one trial")
    if not 0 <= successes <= trials:
        raise ValueError("successes out of range")
    z = NormalDist().inv_cdf(0.5 + level / 2)
    phat = successes / trials
    z2 = z * z
    denom = 1 + z2 / trials
    center = (phat + z2 / (2 * trials)) / denom
    half = z * ((phat * (1 - phat) / trials + z2 / (4 * trials * trials)) ** 0.5) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class TrialReport:
    experiment: str
    seed: int
    config: Dict
    records: List[Dict]
    aggregate: Dict

    def to_json(self) -> str:
        payload = {
            "experiment": self.experiment,
            "seed": self.seed,
            "config": self.config,
            "records": self.records,
            "aggregate": self.aggregate,
        }
        return json.dumps(payload, sort_keys=True, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        keys = sorted({k for rec in self.records for k in rec})
        writer = csv.DictWriter(buf, fieldnames=keys)
        writer.writeheader()
        for rec in self.records:
            writer.writerow(rec)
        return buf.getvalue()

    def write(self, path, fmt: str = "json") -> None:
        text = self.to_json() if fmt == "json" else self.to_csv()
        with open(path, "w") as fh:
            fh.write(text)


def _aggregate_success(records: List[Dict], key: str = "correct") -> Dict:
    trials = len(records)
    successes = sum(1 for r in records if r.get(key))
    agg = {"trials": trials, "successes": successes}
    if trials:
        lo, hi = wilson_interval(successes, trials)
        agg.update(rate=successes / trials, wilson_low=lo, wilson_high=hi)
    return agg


def _run_promise_trial(config: Dict, rng: random.Random) -> Dict:
    n = config["n"]
    variant = config.get("variant", "binary")
    M = config.get("M")
    copies = config.get("copies", 1)
    tau = rng.randint(0, 1)
    inst = promise_mod.random_instance(n, tau, rng)
    enc = promise_mod.encode_instance(inst, variant, M)
    schedule = _schedule_from_config(config)
    stream = promise_mod.instance_stream(enc, schedule, rng)
    meter = SpaceMeter()
    if copies == 1:
        if variant == "binary":
            answer = promise_mod.track_binary(stream, n, rng, meter=meter)
        else:
            answer = promise_mod.track_boxed(stream, n, M, rng, meter=meter)
    else:
        answer = promise_mod.track_amplified(stream, n, variant, rng,
                                             copies=copies, M=M, meter=meter)
    return {
        "tau": tau,
        "answer": answer,
        "correct": answer == tau,
        "wrong": answer is not None and answer != tau,
        "tracked_bits": meter.peak,
        "stream_length": stream.length(),
    }


def _schedule_from_config(config: Dict) -> "promise_mod.Schedule":
    kind = config.get("schedule", "insert")
    if kind == "insert":
        return promise_mod.Schedule.insert_only()
    if kind == "churn":
        return promise_mod.Schedule.random_churn(config.get("churn", 2))
    if kind == "last-player":
        return promise_mod.Schedule.adversarial_last(config.get("last_player", 0),
                                                     config.get("churn", 1))
    raise ValueError(f"unknown schedule {kind!r}")


def _run_triangle_trial(config: Dict, rng: random.Random) -> Dict:
    mode = config["mode"]
    n, d, T = config["n"], config["d"], config["T"]
    eps = Fraction(config.get("eps", "1/2"))
    spec = tri_mod.GraphStreamSpec(
        n=n, d=d, T=T,
        kind="degree" if mode == "maxdeg" else "length",
        churn=config.get("churn", 2),
        L=config.get("L"))
    gen = tri_mod.generate_graph_stream(spec, rng)
    p = _sampling_probability(config, d, T, eps, mode)
    if mode == "maxdeg":
        res = tri_mod.estimate_bounded_degree(gen.stream, p, gen.m, d, rng)
    else:
        res = tri_mod.estimate_bounded_length(gen.stream, p, d, gen.L, eps,
                                              config.get("t_floor", T), rng)
    err = abs(res.estimate - gen.T)
    return {
        "estimate": str(res.estimate),
        "truth": gen.T,
        "rel_err": float(err / gen.T) if gen.T else float(err != 0),
        "correct": err <= eps * gen.T,
        "seed_peak": res.seed_peak,
        "seed_cap": res.seed_cap,
        "cap_respected": res.seed_cap is None or res.seed_peak <= res.seed_cap,
        "peak_bits": res.peak_bits,
        "stream_length": gen.stream.length(),
    }


def _sampling_probability(config: Dict, d: int, T: int, eps: Fraction, mode: str) -> Fraction:
    raw = config.get("p", "auto")
    if raw == "auto":
        scale = 32 if mode == "maxdeg" else 16
        p = Fraction(scale * d) / (eps * eps * Fraction(config.get("t_floor", T)))
        return min(p, Fraction(1))
    return Fraction(raw)


def _run_bernoulli_trial(config: Dict, rng: random.Random) -> Dict:
    p = float(config.get("p", 0.5))
    return {"correct": rng.random() < p}


_RUNNERS: Dict[str, Callable[[Dict, random.Random], Dict]] = {
    "promise": _run_promise_trial,
    "triangle": _run_triangle_trial,
    "bernoulli": _run_bernoulli_trial,
}


def run_experiment(config: Dict) -> TrialReport:
    """Run a seeded trial loop; deterministic given (experiment, seed, config)."""
    experiment = config.get("experiment")
    if experiment not in _RUNNERS:
        raise ValueError(f"unknown experiment {experiment!r}; known: {sorted(_RUNNERS)}")
    trials = config.get("trials", 0)
    if trials < 0:
        raise ValueError("trials must be nonnegative")
    seed = config.get("seed", 0)
    runner = _RUNNERS[experiment]
    records = [runner(config, trial_rng(seed, i)) for i in range(trials)]
    aggregate = _aggregate_success(records)
    if experiment == "promise":
        aggregate["wrong"] = sum(1 for r in records if r["wrong"])
        aggregate["blank"] = sum(1 for r in records if r["answer"] is None)
        if records:
            aggregate["max_tracked_bits"] = max(r["tracked_bits"] for r in records)
    if experiment == "triangle" and records:
        estimates = [Fraction(r["estimate"]) for r in records]
        aggregate["mean_estimate"] = str(sum(estimates) / len(estimates))
        aggregate["cap_respected"] = all(r["cap_respected"] for r in records)
    return TrialReport(experiment=experiment, seed=seed,
                       config={k: v for k, v in sorted(config.items())},
                       records=records, aggregate=aggregate)
