"""Question-only task instruction induction: prompt templates, tag
extraction, shift-cipher generation and accuracy aggregation."""

from taskinduct._core import (
    TaskinductError,
    extract,
    match_answer,
    parse_response,
    render,
    replay_table1,
    rot_decode,
    rot_encode,
    sample_ids,
    serialize_pairs,
    win_tie_lose,
)

__all__ = [
    "TaskinductError",
    "extract",
    "match_answer",
    "parse_response",
    "render",
    "replay_table1",
    "rot_decode",
    "rot_encode",
    "sample_ids",
    "serialize_pairs",
    "win_tie_lose",
]
