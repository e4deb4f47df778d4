"""Perplexity, character/syllable error rates, and evaluation reports."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import BasrError
from .vocab import Vocabulary, to_syllables


def edit_distance(ref: Sequence, hyp: Sequence) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs."""
    m, n = len(ref), len(hyp)
    if m == 0:
        return n
    if n == 0:
        return m
    prev = list(range(n + 1))
    cur = [0] * (n + 1)
    for i in range(1, m + 1):
        cur[0] = i
        ri = ref[i - 1]
        for j in range(1, n + 1):
            sub = prev[j - 1] + (ri != hyp[j - 1])
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, sub)
        prev, cur = cur, prev
    return prev[n]


def cer(refs: Sequence[Sequence], hyps: Sequence[Sequence]) -> float:
    """Corpus-level error rate: total edit distance over total reference length.

    Pooling at the corpus level keeps rates above 100% representable when
    hypotheses are much longer than references.
    """
    if len(refs) != len(hyps):
        raise BasrError(f"cer: got {len(refs)} references but {len(hyps)} hypotheses")
    total_len = sum(len(r) for r in refs)
    if total_len == 0:
        raise BasrError("cer: reference corpus is empty")
    total_dist = sum(edit_distance(r, h) for r, h in zip(refs, hyps))
    return total_dist / total_len


def ser(refs: Sequence[Sequence[int]], hyps: Sequence[Sequence[int]], vocab: Vocabulary) -> float:
    """Error rate after collapsing token ids to syllable classes."""
    return cer(
        [to_syllables(r, vocab) for r in refs],
        [to_syllables(h, vocab) for h in hyps],
    )


def perplexity(model, encoder, data, batch_size: int = 128) -> float:
    """exp(mean per-token negative log likelihood in nats).

    With encoder=None this scores the text-only LM; otherwise acoustic
    embeddings from the utterances' oracle alignments are injected.
    """
    from .training import corpus_mean_nll

    return math.exp(corpus_mean_nll(model, encoder, data, batch_size=batch_size))


@dataclass
class ReportRow:
    model: str
    encoder: str
    ppl: dict[str, float] = field(default_factory=dict)
    cer_oracle: dict[str, float] = field(default_factory=dict)
    cer_practical: dict[str, float] = field(default_factory=dict)
    ser_oracle: dict[str, float] = field(default_factory=dict)
    ser_practical: dict[str, float] = field(default_factory=dict)


@dataclass
class EvalReport:
    """Per-model metric table plus the config fingerprint that produced it."""

    fingerprint: str
    rows: list[ReportRow] = field(default_factory=list)

    def row(self, model: str, encoder: str) -> ReportRow:
        for r in self.rows:
            if r.model == model and r.encoder == encoder:
                return r
        r = ReportRow(model=model, encoder=encoder)
        self.rows.append(r)
        return r

    def to_json(self) -> str:
        payload = {
            "fingerprint": self.fingerprint,
            "rows": [
                {
                    "model": r.model,
                    "encoder": r.encoder,
                    "ppl": r.ppl,
                    "cer_oracle": r.cer_oracle,
                    "cer_practical": r.cer_practical,
                    "ser_oracle": r.ser_oracle,
                    "ser_practical": r.ser_practical,
                }
                for r in self.rows
            ],
        }
        return json.dumps(payload, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        payload = json.loads(text)
        report = cls(fingerprint=payload["fingerprint"])
        for r in payload["rows"]:
            row = report.row(r["model"], r["encoder"])
            row.ppl = r["ppl"]
            row.cer_oracle = r["cer_oracle"]
            row.cer_practical = r["cer_practical"]
            row.ser_oracle = r["ser_oracle"]
            row.ser_practical = r["ser_practical"]
        return report

    def to_table(self) -> str:
        """Aligned plain-text table: PPL | CER orac | CER prac | SER orac | SER prac."""
        headers = ["Model", "Encoder"]
        groups = ["PPL", "CER (Orac.)", "CER (Prac.)", "SER (Orac.)", "SER (Prac.)"]
        for g in groups:
            headers += [f"{g} Dev", f"{g} Test"]

        def fmt(d: dict[str, float], split: str, pct: bool) -> str:
            if split not in d:
                return "-"
            return f"{100 * d[split]:.1f}" if pct else f"{d[split]:.2f}"

        lines = [headers]
        for r in self.rows:
            cells = [r.model, r.encoder]
            for attr, pct in [
                ("ppl", False),
                ("cer_oracle", True),
                ("cer_practical", True),
                ("ser_oracle", True),
                ("ser_practical", True),
            ]:
                d = getattr(r, attr)
                cells += [fmt(d, "dev", pct), fmt(d, "test", pct)]
            lines.append(cells)
        widths = [max(len(row[i]) for row in lines) for i in range(len(headers))]
        out = []
        for k, row in enumerate(lines):
            out.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))
            if k == 0:
                out.append("-" * len(out[0]))
        return "\n".join(out) + "\n"

    def save(self, json_path: str | Path, table_path: str | Path | None = None) -> None:
        Path(json_path).write_text(self.to_json(), encoding="utf-8")
        if table_path is not None:
            Path(table_path).write_text(self.to_table(), encoding="utf-8")
