"""Relevance evaluation: label distributions and nDCG@k from judgment files.

Judgments arrive as (query_id, rank, label) rows; per query the ranks must
form a gapless 1..p prefix. Labels map to ordinal gains Excellent=3,
Good=2, Acceptable=1, Unacceptable=0 (the mapping is echoed in reports).
DCG uses the exponential-gain form (2^g - 1)/log2(i+1) by default; a linear
variant is selectable.
"""

from __future__ import annotations

import csv
import math
from collections import Counter, OrderedDict
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

from .errors import IoFailure, MissingRanks, NoQueries


class RelevanceLabel(IntEnum):
    UNACCEPTABLE = 0
    ACCEPTABLE = 1
    GOOD = 2
    EXCELLENT = 3


GAINS = {
    RelevanceLabel.EXCELLENT: 3,
    RelevanceLabel.GOOD: 2,
    RelevanceLabel.ACCEPTABLE: 1,
    RelevanceLabel.UNACCEPTABLE: 0,
}

_LABEL_NAMES = {label.name.lower(): label for label in RelevanceLabel}


@dataclass
class EvalJudgment:
    query_id: str
    rank: int  # 1-based
    label: RelevanceLabel


def parse_label(text: str) -> RelevanceLabel:
    try:
        return _LABEL_NAMES[text.strip().lower()]
    except KeyError:
        raise IoFailure(f"unknown relevance label {text!r}") from None


def _gains_at(judgments: list[EvalJudgment], p: int) -> list[int]:
    by_rank = {}
    for j in judgments:
        if j.rank in by_rank:
            raise MissingRanks(f"duplicate rank {j.rank} for query {j.query_id!r}")
        by_rank[j.rank] = j.label
    missing = [r for r in range(1, p + 1) if r not in by_rank]
    if missing:
        raise MissingRanks(
            f"query {judgments[0].query_id!r} lacks ranks {missing} (need 1..{p})")
    if sorted(by_rank) != list(range(1, len(by_rank) + 1)):
        raise MissingRanks(
            f"query {judgments[0].query_id!r} has gaps in its rank prefix")
    return [GAINS[by_rank[r]] for r in range(1, p + 1)]


def dcg(gains: list[int], variant: str = "exponential") -> float:
    total = 0.0
    for i, g in enumerate(gains, start=1):
        num = (2 ** g - 1) if variant == "exponential" else g
        total += num / math.log2(i + 1)
    return total


def ndcg_at(judgments: list[EvalJudgment], p: int, variant: str = "exponential") -> float:
    """DCG over ranks 1..p divided by the ideal DCG of the query's own
    labels; 0.0 when the ideal is 0 (all labels at the zero gain)."""
    gains = _gains_at(judgments, p)
    ideal = sorted((GAINS[j.label] for j in judgments), reverse=True)[:p]
    idcg = dcg(ideal, variant)
    if idcg == 0.0:
        return 0.0
    return dcg(gains, variant) / idcg


def group_by_query(judgments: list[EvalJudgment]) -> "OrderedDict[str, list[EvalJudgment]]":
    grouped: OrderedDict[str, list[EvalJudgment]] = OrderedDict()
    for j in judgments:
        grouped.setdefault(j.query_id, []).append(j)
    return grouped


def mean_ndcg(judgments: list[EvalJudgment], p: int, variant: str = "exponential") -> float:
    grouped = group_by_query(judgments)
    if not grouped:
        raise NoQueries("no judgments given")
    return sum(ndcg_at(group, p, variant) for group in grouped.values()) / len(grouped)


def _percent_half_up(count: int, total: int) -> int:
    # floor((100*count + total/2) / total), in exact integer arithmetic
    return (200 * count + total) // (2 * total)


def label_distribution(judgments: list[EvalJudgment]) -> tuple[dict, dict]:
    """Counts and round-half-up percentages per label."""
    if not judgments:
        raise NoQueries("no judgments given")
    counts = Counter(j.label for j in judgments)
    total = len(judgments)
    count_out = {label.name.lower(): counts.get(label, 0)
                 for label in sorted(RelevanceLabel, key=lambda l: -GAINS[l])}
    pct_out = {name: _percent_half_up(c, total) for name, c in count_out.items()}
    return count_out, pct_out


def load_judgments(path) -> list[EvalJudgment]:
    """CSV with header query_id,rank,label."""
    out = []
    try:
        with Path(path).open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or \
                    [f.strip() for f in reader.fieldnames] != ["query_id", "rank", "label"]:
                raise IoFailure(f"{path}: expected header query_id,rank,label")
            for row in reader:
                out.append(EvalJudgment(
                    query_id=row["query_id"],
                    rank=int(row["rank"]),
                    label=parse_label(row["label"]),
                ))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except (ValueError, KeyError) as exc:
        raise IoFailure(f"{path}: bad judgment row: {exc}") from exc
    return out


def evaluation_report(judgments: list[EvalJudgment], variant: str = "exponential",
                      cutoffs: tuple[int, ...] = (3, 5)) -> dict:
    counts, percentages = label_distribution(judgments)
    grouped = group_by_query(judgments)
    per_query = []
    for qid, group in grouped.items():
        entry = {"query_id": qid}
        for p in cutoffs:
            entry[f"ndcg@{p}"] = ndcg_at(group, p, variant)
        per_query.append(entry)
    return {
        "gains": {label.name.lower(): GAINS[label]
                  for label in sorted(RelevanceLabel, key=lambda l: -GAINS[l])},
        "gain_variant": variant,
        "counts": counts,
        "percentages": percentages,
        "ndcg": {str(p): mean_ndcg(judgments, p, variant) for p in cutoffs},
        "per_query": per_query,
    }
