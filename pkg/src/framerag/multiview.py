"""Stage 3: iterative multi-view question answering.

Each round asks the generator to reason about the retrieved frames from a
view not used before, carrying all earlier reasons and answers as context.
The loop stops early once two consecutive rounds agree; the final answer is
a plurality vote where ties go to the answer produced latest. Answers are
canonicalized (trim, case, option-letter extraction) before any equality
test, because raw generations differ in formatting.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from .backends import Generator, Message
from .core import FrameRecord, PipelineConfig, Query
from .errors import AnswerMissing, QAFailed
from .templates import options_block

_FIRST_ROUND_RULES = (
    "Answer the question using the video frames. First give your reasoning, "
    "then your answer, formatted exactly as:\nREASON: <your reasoning, naming "
    "the view you analyzed the frames from>\nANSWER: <your answer>"
)
_NEXT_ROUND_RULES = (
    "Answer the same question again, this time from a view that differs from "
    "those employed in previous rounds, and state that view explicitly. "
    "Use the same format:\nREASON: <reasoning from the new view>\nANSWER: <your answer>"
)
_OPTION_RULE = "Answer with the letter of one option."

_LETTER = re.compile(r"^\(?([A-Za-z])\)?[.):]?$")
_ANSWER_LINE = re.compile(r"^\s*ANSWER\s*:\s*(.+)$", re.IGNORECASE | re.MULTILINE)
_REASON_BLOCK = re.compile(
    r"REASON\s*:\s*(.*?)(?=^\s*ANSWER\s*:)", re.IGNORECASE | re.DOTALL | re.MULTILINE
)


@dataclass(frozen=True, slots=True)
class QARound:
    """One reasoning round: 1-based round number, stated reasoning, canonical answer."""

    t: int
    reason: str
    answer: str

    def __post_init__(self) -> None:
        if self.t < 1:
            raise ValueError("round numbers start at 1")
        if not self.answer:
            raise ValueError("round answer must be nonempty")


@dataclass(frozen=True, slots=True)
class QATrace:
    rounds: tuple[QARound, ...]
    k: int
    final: str

    def to_dict(self) -> dict:
        return {
            "rounds": [{"t": r.t, "reason": r.reason, "answer": r.answer} for r in self.rounds],
            "k": self.k,
            "final": self.final,
        }


def canonicalize_answer(raw: str) -> str:
    """Normalize an answer for equality: trim, unify case, extract a bare
    option letter from shapes like ``(b)`` or ``B.``."""
    text = raw.strip().strip('"')
    match = _LETTER.match(text)
    if match:
        return match.group(1).upper()
    return " ".join(text.split()).casefold()


def build_round_prompt(
    query: Query, frames: Sequence[FrameRecord], history: Sequence[QARound]
) -> list[Message]:
    """Round 1 sees only query and frames; later rounds also see every prior
    reason/answer pair and the instruction to adopt a fresh view."""
    rules = _FIRST_ROUND_RULES if not history else _NEXT_ROUND_RULES
    if query.options:
        rules = f"{rules}\n{_OPTION_RULE}"
    parts = [f"Question: {query.text}"]
    block = options_block(query)
    if block:
        parts.append(block)
    if history:
        lines = ["Previous rounds:"]
        for item in history:
            lines.append(f"Round {item.t} reason: {item.reason}")
            lines.append(f"Round {item.t} answer: {item.answer}")
        parts.append("\n".join(lines))
    return [
        {"role": "system", "text": rules},
        {
            "role": "user",
            "text": "\n\n".join(parts),
            "images": [frame.content_ref for frame in frames],
        },
    ]


def parse_round(response: str, t: int = 1) -> QARound:
    """Extract the labeled REASON/ANSWER fields of one round."""
    answer_match = _ANSWER_LINE.search(response)
    if not answer_match:
        raise AnswerMissing("response carries no ANSWER field")
    answer = canonicalize_answer(answer_match.group(1))
    if not answer:
        raise AnswerMissing("ANSWER field is empty")
    reason_match = _REASON_BLOCK.search(response)
    reason = reason_match.group(1).strip() if reason_match else ""
    return QARound(t=t, reason=reason, answer=answer)


def should_stop(answers: Sequence[str], t: int, total_views: int) -> bool:
    """Stop at the view budget, or as soon as two consecutive answers agree."""
    if t != len(answers) or t < 1:
        raise ValueError("t must equal the number of answers so far")
    if t >= total_views:
        return True
    if t >= 2:
        return canonicalize_answer(answers[-1]) == canonicalize_answer(answers[-2])
    return False


def vote(answers: Sequence[str]) -> str:
    """Plurality winner; among counts tied at the maximum, the answer whose
    latest occurrence is most recent wins."""
    if not answers:
        raise ValueError("cannot vote over zero answers")
    canon = [canonicalize_answer(a) for a in answers]
    counts: dict[str, int] = {}
    latest: dict[str, int] = {}
    for i, answer in enumerate(canon):
        counts[answer] = counts.get(answer, 0) + 1
        latest[answer] = i
    return max(counts, key=lambda a: (counts[a], latest[a]))


def run_multiview(
    frames: Sequence[FrameRecord],
    query: Query,
    cfg: PipelineConfig,
    generator: Generator,
) -> QATrace:
    """Loop build -> generate -> parse -> stop-check, then vote.

    One unparseable response earns one retry; a round failing both attempts
    is discarded and does not consume a view. Only a run where every attempt
    failed raises :class:`QAFailed`.
    """
    if not frames:
        raise ValueError("cannot answer over zero frames")
    rounds: list[QARound] = []
    discarded = 0
    while len(rounds) < cfg.n_views and discarded < cfg.n_views:
        t = len(rounds) + 1
        prompt = build_round_prompt(query, frames, rounds)
        round_result = None
        for _attempt in range(2):
            response = generator.generate(prompt)
            try:
                round_result = parse_round(response.text, t=t)
                break
            except AnswerMissing:
                continue
        if round_result is None:
            discarded += 1
            continue
        rounds.append(round_result)
        if should_stop([r.answer for r in rounds], len(rounds), cfg.n_views):
            break
    if not rounds:
        raise QAFailed(f"all {discarded} rounds were discarded")
    return QATrace(
        rounds=tuple(rounds),
        k=len(rounds),
        final=vote([r.answer for r in rounds]),
    )
