"""Unlearning evaluation metrics: ROUGE-1 recall, MRR, top-hit rate, deviation score.

The deviation score is the Euclidean distance (scaled by 100) from the
ideal unlearned state: forget ROUGE-1 of 0 with retain ROUGE-1 of 1.
"""

from __future__ import annotations

import json
import math
import string
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .compiler import ForgetSplit
from .contracts import slot_position
from .errors import DatasetParseError, InvalidParameterError, MissingGenerationsError

_PUNCT_TABLE = str.maketrans({c: " " for c in string.punctuation})


def tokenize(text: str) -> list[str]:
    """Lowercase, treat ASCII punctuation as whitespace, split."""
    return text.lower().translate(_PUNCT_TABLE).split()


def rouge1_recall(candidate: str, reference: str) -> float:
    """Clipped unigram-count overlap divided by the reference unigram count."""
    ref_tokens = tokenize(reference)
    if not ref_tokens:
        raise InvalidParameterError("reference is empty after tokenization")
    ref_counts = Counter(ref_tokens)
    cand_counts = Counter(tokenize(candidate))
    overlap = sum(min(n, cand_counts[tok]) for tok, n in ref_counts.items())
    return overlap / len(ref_tokens)


def mrr(ranks) -> float:
    """Mean reciprocal rank of the answer tokens."""
    ranks = _checked_ranks(ranks)
    return sum(1.0 / r for r in ranks) / len(ranks)


def thr(ranks, m: int = 100) -> float:
    """Fraction of answer tokens ranked within the top ``m`` logits."""
    if m < 1:
        raise InvalidParameterError(f"cutoff m must be >= 1, got {m}")
    ranks = _checked_ranks(ranks)
    return sum(1 for r in ranks if r <= m) / len(ranks)


def _checked_ranks(ranks) -> list[int]:
    ranks = list(ranks)
    if not ranks:
        raise InvalidParameterError("rank list is empty")
    if any(r < 1 for r in ranks):
        raise InvalidParameterError("ranks must be >= 1")
    return ranks


def deviation_score(rouge_forget: float, rouge_retain: float) -> float:
    """100 * sqrt(forget^2 + (1 - retain)^2); lower is better."""
    for name, value in (("rouge_forget", rouge_forget), ("rouge_retain", rouge_retain)):
        if not 0.0 <= value <= 1.0:
            raise InvalidParameterError(f"{name} must lie in [0, 1], got {value}")
    return 100.0 * math.sqrt(rouge_forget**2 + (1.0 - rouge_retain) ** 2)


@dataclass(frozen=True)
class GenerationRecord:
    edge: str
    slot: str
    text: str


@dataclass(frozen=True)
class RankRecord:
    edge: str
    slot: str
    target_ranks: tuple[int, ...]

    def __post_init__(self):
        if not self.target_ranks:
            raise InvalidParameterError(f"empty rank list for {self.edge}/{self.slot}")
        if any(r < 1 for r in self.target_ranks):
            raise InvalidParameterError(f"ranks must be >= 1 for {self.edge}/{self.slot}")


@dataclass(frozen=True)
class QuestionScore:
    edge: str
    slot: str
    split: str
    rouge1: float
    mrr: float | None = None
    thr: float | None = None


@dataclass(frozen=True)
class MetricReport:
    rouge1_forget: float
    rouge1_retain: float
    deviation: float
    mrr_forget: float | None = None
    mrr_retain: float | None = None
    thr_forget: float | None = None
    thr_retain: float | None = None
    breakdown: tuple[QuestionScore, ...] = ()

    def edge_rouge(self, edge: str) -> float:
        """Mean ROUGE-1 over one edge's questions (any split)."""
        scores = [q.rouge1 for q in self.breakdown if q.edge == edge]
        if not scores:
            raise InvalidParameterError(f"no questions for edge {edge!r} in breakdown")
        return sum(scores) / len(scores)

    def to_dict(self) -> dict:
        out = {
            "rouge1_forget": self.rouge1_forget,
            "rouge1_retain": self.rouge1_retain,
            "deviation_score": self.deviation,
        }
        for name in ("mrr_forget", "mrr_retain", "thr_forget", "thr_retain"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out


def _question_key(edge: str, slot: str) -> tuple[str, int]:
    return (edge, slot_position(slot))


def aggregate(split: ForgetSplit, generations, ranks=None, thr_cutoff: int = 100) -> MetricReport:
    """Per-split metric means plus the deviation score.

    Every question in the split must have a generation; rank records are
    optional and enable the MRR/THR columns.
    """
    gen_by_key = {}
    for g in generations:
        gen_by_key[_question_key(g.edge, g.slot)] = g
    rank_by_key = {}
    for r in ranks or ():
        rank_by_key[_question_key(r.edge, r.slot)] = r

    missing = []
    for pair in (*split.forget, *split.retain):
        if _question_key(pair.edge, pair.slot) not in gen_by_key:
            missing.append((pair.edge, pair.slot))
    if missing:
        raise MissingGenerationsError(missing)

    breakdown: list[QuestionScore] = []
    sums = {"forget": [0.0, 0], "retain": [0.0, 0]}
    mrr_sums = {"forget": [0.0, 0], "retain": [0.0, 0]}
    thr_sums = {"forget": [0.0, 0], "retain": [0.0, 0]}
    for split_name, pairs in (("forget", split.forget), ("retain", split.retain)):
        for pair in pairs:
            key = _question_key(pair.edge, pair.slot)
            score = rouge1_recall(gen_by_key[key].text, pair.answer)
            sums[split_name][0] += score
            sums[split_name][1] += 1
            q_mrr = q_thr = None
            record = rank_by_key.get(key)
            if record is not None:
                q_mrr = mrr(record.target_ranks)
                q_thr = thr(record.target_ranks, thr_cutoff)
                mrr_sums[split_name][0] += q_mrr
                mrr_sums[split_name][1] += 1
                thr_sums[split_name][0] += q_thr
                thr_sums[split_name][1] += 1
            breakdown.append(QuestionScore(edge=pair.edge, slot=pair.slot, split=split_name,
                                           rouge1=score, mrr=q_mrr, thr=q_thr))

    def mean(pair):
        total, count = pair
        return total / count if count else None

    rouge_forget = mean(sums["forget"]) if sums["forget"][1] else 0.0
    rouge_retain = mean(sums["retain"]) if sums["retain"][1] else 1.0
    return MetricReport(
        rouge1_forget=rouge_forget,
        rouge1_retain=rouge_retain,
        deviation=deviation_score(rouge_forget, rouge_retain),
        mrr_forget=mean(mrr_sums["forget"]),
        mrr_retain=mean(mrr_sums["retain"]),
        thr_forget=mean(thr_sums["forget"]),
        thr_retain=mean(thr_sums["retain"]),
        breakdown=tuple(breakdown),
    )


def _read_jsonl(path: str | Path, required: dict) -> list[dict]:
    path = Path(path)
    records = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                raise DatasetParseError("blank line", str(path), lineno)
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise DatasetParseError(f"invalid JSON ({err.msg})", str(path), lineno) from None
            if not isinstance(record, dict):
                raise DatasetParseError("record is not a JSON object", str(path), lineno)
            for key, kind in required.items():
                if key not in record:
                    raise DatasetParseError(f"missing field {key!r}", str(path), lineno)
                if not isinstance(record[key], kind):
                    raise DatasetParseError(f"field {key!r} has the wrong type", str(path), lineno)
            records.append(record)
    return records


def read_generations(path: str | Path) -> list[GenerationRecord]:
    records = _read_jsonl(path, {"edge": str, "slot": str, "text": str})
    return [GenerationRecord(edge=r["edge"], slot=r["slot"], text=r["text"]) for r in records]


def write_generations(path: str | Path, generations) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for g in generations:
            fh.write(json.dumps({"edge": g.edge, "slot": g.slot, "text": g.text},
                                ensure_ascii=False) + "\n")


def read_ranks(path: str | Path) -> list[RankRecord]:
    records = _read_jsonl(path, {"edge": str, "slot": str, "target_ranks": list})
    out = []
    for i, r in enumerate(records, start=1):
        ranks = r["target_ranks"]
        if not all(isinstance(x, int) for x in ranks):
            raise DatasetParseError("field 'target_ranks' must hold integers", str(path), i)
        out.append(RankRecord(edge=r["edge"], slot=r["slot"], target_ranks=tuple(ranks)))
    return out


def write_ranks(path: str | Path, ranks) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in ranks:
            fh.write(json.dumps({"edge": r.edge, "slot": r.slot,
                                 "target_ranks": list(r.target_ranks)}, ensure_ascii=False) + "\n")
