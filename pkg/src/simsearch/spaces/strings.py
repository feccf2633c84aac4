"""String edit distances: Levenshtein and its length-normalized variant."""
from __future__ import annotations

from ..data import split_label
from .base import Space, register_space


def levenshtein_dp(p: str, s: str) -> int:
    """Classic two-row dynamic program over the (m+1) x (n+1) cost matrix."""
    m, n = len(p), len(s)
    if m == 0:
        return n
    if n == 0:
        return m
    prev = list(range(n + 1))
    cur = [0] * (n + 1)
    for i in range(1, m + 1):
        cur[0] = i
        pc = p[i - 1]
        for j in range(1, n + 1):
            cost = 0 if pc == s[j - 1] else 1
            a = prev[j] + 1          # deletion
            b = cur[j - 1] + 1       # insertion
            c = prev[j - 1] + cost   # match / substitution
            cur[j] = a if a < b else b
            if c < cur[j]:
                cur[j] = c
        prev, cur = cur, prev
    return prev[n]


def _levenshtein_myers(p: str, s: str) -> int:
    """Bit-parallel edit distance for patterns up to 64 symbols."""
    m = len(p)
    peq: dict[str, int] = {}
    for i, ch in enumerate(p):
        peq[ch] = peq.get(ch, 0) | (1 << i)
    mask = (1 << m) - 1
    high = 1 << (m - 1)
    pv = mask
    mv = 0
    score = m
    for ch in s:
        eq = peq.get(ch, 0)
        xv = eq | mv
        xh = ((((eq & pv) + pv) & mask) ^ pv) | eq
        ph = mv | (~(xh | pv) & mask)
        mh = pv & xh
        if ph & high:
            score += 1
        elif mh & high:
            score -= 1
        ph = ((ph << 1) | 1) & mask
        pv = ((mh << 1) & mask) | (~(xv | ph) & mask)
        mv = ph & xv
    return score


def levenshtein(p: str, s: str) -> int:
    """Edit distance; dispatches to the bit-parallel path for short patterns.

    Both paths return the value defined by the dynamic program.
    """
    if p == s:
        return 0
    if 0 < len(p) <= 64 and s:
        return _levenshtein_myers(p, s)
    return levenshtein_dp(p, s)


def normalized_levenshtein(p: str, s: str) -> float:
    """Edit distance divided by max string length; 0 when both are empty."""
    longest = max(len(p), len(s))
    if longest == 0:
        return 0.0
    return levenshtein(p, s) / longest


class StringSpace(Space):
    """Raw character sequences under the (optionally normalized) edit distance."""

    dist_type = "int"

    def __init__(self, normalized: bool = False):
        self.normalized = normalized

    def parse_line(self, line: str):
        label, rest = split_label(line)
        return label, rest

    def format_payload(self, payload: str) -> str:
        return payload

    def make_payload(self, text: str) -> str:
        return text

    def _distance(self, x: str, y: str):
        if self.normalized:
            return normalized_levenshtein(x, y)
        return levenshtein(x, y)


def _register_all():
    register_space("leven", lambda params, dt: StringSpace(), dist_types=("int",))
    register_space("normleven", lambda params, dt: StringSpace(normalized=True))


_register_all()
