"""Memorization training, the unlearning loop, lr sweep, and gradient checking.

Memorization uses full-batch Adam until greedy decoding reproduces every
answer exactly.  Unlearning applies plain SGD steps (ascent for GA, descent
otherwise) so that parameters receiving zero gradient stay bit-identical.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .compiler import CompiledDataset, ForgetSplit
from .entities import child_seed
from .errors import ConvergenceError, DivergenceError, InvalidParameterError
from .losses import Grads, loss_dpo, loss_ga, loss_gd, loss_npo, loss_ukl
from .metrics import MetricReport, aggregate, write_generations, write_ranks
from .model import ToyMemorizer

DEFAULT_IDK_ANSWERS = (
    "I don't know.",
    "I cannot answer that.",
    "No information available.",
    "That is not something I can share.",
    "I have no knowledge of that.",
)

METHOD_NAMES = ("ga", "gd", "ukl", "dpo", "npo")

DEFAULT_LR_GRID = (1e-3, 3e-3, 1e-2, 3e-2, 1e-1)


@dataclass(frozen=True)
class UnlearnMethod:
    name: str
    beta: float = 0.1

    def __post_init__(self):
        if self.name not in METHOD_NAMES:
            raise InvalidParameterError(
                f"unknown method {self.name!r}; expected one of {', '.join(METHOD_NAMES)}")
        if self.name == "npo" and self.beta <= 0:
            raise InvalidParameterError("npo requires beta > 0")

    @property
    def uses_retain(self) -> bool:
        return self.name in ("gd", "ukl", "dpo")

    @property
    def uses_reference(self) -> bool:
        return self.name in ("ukl", "npo")


@dataclass(frozen=True)
class TrainConfig:
    """Shared knobs for memorization and unlearning runs.

    ``batch_size`` of None means full batch.  A zero learning rate is
    allowed and makes the run a no-op (useful as a control).
    """

    learning_rate: float = 3e-2
    epochs: int = 20
    batch_size: int | None = 4
    idk_answers: tuple[str, ...] = DEFAULT_IDK_ANSWERS
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise InvalidParameterError("learning rate must be non-negative")
        if self.epochs < 1:
            raise InvalidParameterError("epochs must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise InvalidParameterError("batch size must be positive")
        if not self.idk_answers:
            raise InvalidParameterError("idk answer list must not be empty")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "idk_answers": list(self.idk_answers),
            "seed": self.seed,
        }


def memorize_config(learning_rate: float = 3e-2, epochs: int = 3000, seed: int = 0) -> TrainConfig:
    """Full-batch defaults for the memorization phase."""
    return TrainConfig(learning_rate=learning_rate, epochs=epochs, batch_size=None, seed=seed)


class _Adam:
    """Plain Adam (no weight decay, so zero-gradient rows never move)."""

    def __init__(self, params: dict, lr: float, b1: float = 0.9, b2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.b1, self.b2, self.eps = b1, b2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, grads: Grads) -> None:
        self.t += 1
        for k, g in grads.items():
            g = g.astype(self.params[k].dtype, copy=False)
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            mhat = self.m[k] / (1 - self.b1**self.t)
            vhat = self.v[k] / (1 - self.b2**self.t)
            self.params[k] -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


def exact_mismatches(model: ToyMemorizer, pairs) -> list[tuple[str, str]]:
    """Question ids whose greedy decode differs from the reference answer."""
    out = []
    for record, pair in zip(model.decode_all(pairs), pairs):
        if record.text != pair.answer:
            out.append((pair.edge, pair.slot))
    return out


def memorize(ds: CompiledDataset, cfg: TrainConfig | None = None, *, d: int = 64,
             dtype=np.float32, check_every: int = 10) -> tuple[ToyMemorizer, ToyMemorizer]:
    """Train until every answer decodes exactly; return (model, frozen reference).

    Raises ConvergenceError naming the residual questions if the epoch cap
    is hit first.
    """
    if not ds.qa:
        raise InvalidParameterError("cannot memorize an empty dataset")
    cfg = cfg or memorize_config()
    model = ToyMemorizer.from_dataset(ds, d=d, seed=cfg.seed,
                                      extra_answers=cfg.idk_answers, dtype=dtype)
    batch = model.encode(ds.qa)
    adam = _Adam(model.params, lr=cfg.learning_rate)
    rng = random.Random(child_seed(cfg.seed, "memorize-batches"))
    n = len(batch)

    for epoch in range(1, cfg.epochs + 1):
        if cfg.batch_size is None:
            _, grads = model.ce_loss_and_grads(batch)
            adam.step(grads)
        else:
            order = list(range(n))
            rng.shuffle(order)
            for lo in range(0, n, cfg.batch_size):
                sub = batch.subset(order[lo:lo + cfg.batch_size])
                _, grads = model.ce_loss_and_grads(sub)
                adam.step(grads)
        if epoch % check_every == 0 and not exact_mismatches(model, ds.qa):
            return model, model.copy()

    residual = exact_mismatches(model, ds.qa)
    if residual:
        raise ConvergenceError(
            f"memorization did not converge within {cfg.epochs} epochs; "
            f"{len(residual)} question(s) still wrong", residual)
    return model, model.copy()


@dataclass(frozen=True)
class SimResult:
    method: str
    beta: float
    config: dict
    trajectory: tuple[MetricReport, ...]
    generations: tuple = ()
    ranks: tuple = ()

    @property
    def final(self) -> MetricReport:
        return self.trajectory[-1]


def run_unlearning(model: ToyMemorizer, split: ForgetSplit, method: UnlearnMethod,
                   cfg: TrainConfig, reference: ToyMemorizer | None = None) -> SimResult:
    """Run one unlearning schedule, evaluating greedy-decode metrics per epoch.

    Each epoch is a full pass over the forget set; methods that use retain
    support draw one retained sample per forget sample.  The model is
    mutated in place; ``reference`` defaults to a frozen copy taken at entry.
    """
    if not split.forget:
        raise InvalidParameterError("forget set is empty")
    if method.uses_retain and not split.retain:
        raise InvalidParameterError(f"{method.name} requires a non-empty retain set")
    reference = reference if reference is not None else model.copy()

    f_batch = model.encode(split.forget)
    r_batch = model.encode(split.retain) if split.retain else None
    idk_batch = None
    if method.name == "dpo":
        substitutions = {
            (pair.edge, pair.slot): cfg.idk_answers[i % len(cfg.idk_answers)]
            for i, pair in enumerate(split.forget)
        }
        idk_batch = model.encode(split.forget, answers=substitutions)

    eval_pairs = (*split.forget, *split.retain)
    rng = random.Random(child_seed(cfg.seed, "unlearn", method.name))
    n_forget = len(f_batch)
    n_retain = len(r_batch) if r_batch is not None else 0
    sign = +1.0 if method.name == "ga" else -1.0

    trajectory = []
    generations = ranks = ()
    for epoch in range(1, cfg.epochs + 1):
        order = list(range(n_forget))
        rng.shuffle(order)
        step = cfg.batch_size or n_forget
        for lo in range(0, n_forget, step):
            chunk = order[lo:lo + step]
            fb = f_batch.subset(chunk)
            if method.name == "ga":
                _, grads = loss_ga(model, fb)
            elif method.name == "gd":
                rb = r_batch.subset([rng.randrange(n_retain) for _ in chunk])
                _, grads = loss_gd(model, fb, rb)
            elif method.name == "ukl":
                rb = r_batch.subset([rng.randrange(n_retain) for _ in chunk])
                _, grads = loss_ukl(model, reference, fb, rb)
            elif method.name == "dpo":
                ib = idk_batch.subset(chunk)
                rb = r_batch.subset([rng.randrange(n_retain) for _ in chunk])
                _, grads = loss_dpo(model, rb, ib)
            else:
                _, grads = loss_npo(model, reference, fb, method.beta)
            for k, g in grads.items():
                model.params[k] += sign * cfg.learning_rate * g.astype(model.params[k].dtype, copy=False)
        if not model.finite():
            raise DivergenceError(method.name, epoch)
        generations = tuple(model.decode_all(eval_pairs))
        ranks = tuple(model.rank_records(eval_pairs))
        trajectory.append(aggregate(split, generations, ranks))

    return SimResult(method=method.name, beta=method.beta, config=cfg.to_dict(),
                     trajectory=tuple(trajectory), generations=generations, ranks=ranks)


@dataclass(frozen=True)
class SweepRow:
    learning_rate: float
    rouge1_forget: float | None
    rouge1_retain: float | None
    deviation: float | None
    diverged: bool = False


@dataclass(frozen=True)
class SweepResult:
    selected: float
    retain_floor: float
    rows: tuple[SweepRow, ...]


def sweep_learning_rate(model: ToyMemorizer, split: ForgetSplit, method: UnlearnMethod,
                        cfg: TrainConfig, grid=DEFAULT_LR_GRID,
                        retain_floor: float = 0.8) -> SweepResult:
    """Pick the learning rate that maximizes forgetting subject to a retain floor.

    Every candidate runs the full schedule from a copy of ``model``.  If no
    rate keeps retain ROUGE-1 at or above the floor, the rate with the best
    retain score is selected instead.
    """
    rows: list[SweepRow] = []
    for lr in grid:
        try:
            result = run_unlearning(model.copy(), split, method, replace(cfg, learning_rate=lr))
        except DivergenceError:
            rows.append(SweepRow(lr, None, None, None, diverged=True))
            continue
        final = result.final
        rows.append(SweepRow(lr, final.rouge1_forget, final.rouge1_retain, final.deviation))

    alive = [r for r in rows if not r.diverged]
    if not alive:
        raise ConvergenceError("every learning rate in the sweep diverged")
    qualifying = [r for r in alive if r.rouge1_retain >= retain_floor]
    if qualifying:
        selected = min(qualifying, key=lambda r: (r.rouge1_forget, r.learning_rate))
    else:
        selected = max(alive, key=lambda r: (r.rouge1_retain, -r.learning_rate))
    return SweepResult(selected=selected.learning_rate, retain_floor=retain_floor, rows=tuple(rows))


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    mean_rel_error: float
    n_coords: int
    worst: tuple[str, int, float, float]  # (param, flat index, analytic, numeric)


def grad_check(model: ToyMemorizer, loss_fn, n_coords: int = 256, step: float = 1e-5,
               seed: int = 0) -> GradCheckReport:
    """Central-finite-difference check of ``loss_fn`` at the current parameters.

    ``loss_fn(model) -> (loss, grads)``.  The check runs on a float64 copy;
    coordinates are sampled uniformly over all parameter tables.
    """
    work = model.astype(np.float64)
    _, grads = loss_fn(work)

    names = sorted(work.params)
    sizes = [work.params[k].size for k in names]
    total = sum(sizes)
    rng = np.random.default_rng(seed)
    coords = rng.choice(total, size=min(n_coords, total), replace=False)

    rel_errors = []
    worst = ("", 0, 0.0, 0.0)
    max_rel = -1.0
    for flat in sorted(int(c) for c in coords):
        k, offset = _locate(names, sizes, flat)
        array = work.params[k]
        orig = array.flat[offset]
        array.flat[offset] = orig + step
        loss_plus, _ = loss_fn(work)
        array.flat[offset] = orig - step
        loss_minus, _ = loss_fn(work)
        array.flat[offset] = orig
        numeric = (loss_plus - loss_minus) / (2.0 * step)
        analytic = float(grads[k].flat[offset])
        rel = abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-8)
        rel_errors.append(rel)
        if rel > max_rel:
            max_rel = rel
            worst = (k, offset, analytic, numeric)
    return GradCheckReport(max_rel_error=max_rel,
                           mean_rel_error=float(np.mean(rel_errors)),
                           n_coords=len(rel_errors), worst=worst)


def _locate(names, sizes, flat: int) -> tuple[str, int]:
    for name, size in zip(names, sizes):
        if flat < size:
            return name, flat
        flat -= size
    raise InvalidParameterError("coordinate outside parameter space")


def export_sim_result(result: SimResult, directory: str | Path, stem: str) -> dict[str, Path]:
    """Write generations, ranks, and the report (with trajectory) for one run."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "generations": directory / f"{stem}.generations.jsonl",
        "ranks": directory / f"{stem}.ranks.jsonl",
        "report": directory / f"{stem}.report.json",
    }
    write_generations(paths["generations"], result.generations)
    write_ranks(paths["ranks"], result.ranks)
    payload = {
        "method": result.method,
        "beta": result.beta,
        "config": result.config,
        "final": result.final.to_dict(),
        "trajectory": [r.to_dict() for r in result.trajectory],
    }
    paths["report"].write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return paths
