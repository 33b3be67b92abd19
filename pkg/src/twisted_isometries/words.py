"""Words in the universal twisted-isometry relations and their normal forms.

Letters are ``v_i``, ``v_i*`` and ``u_ij^e``. The u-letters are central, so a
word normalises to ``u^t · v_1^a1 v_1*^b1 · v_2^a2 v_2*^b2 ...``. Moving a
letter with index i past one with index j < i costs a twist:

    x_i y_j = u_ji^(-ε(x)ε(y)) y_j x_i,   ε(v) = +1, ε(v*) = -1

which covers ``v_i v_j = u_ij v_j v_i`` and ``v_i* v_j = u_ij* v_j v_i*``
together with their adjoints. Within one index only ``v* v = 1`` applies.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import TruncationError, WordSyntaxError
from .monomial_ops import _block_diag, compare_polys, max_check_level, word_blocks

_V = re.compile(r"^v(\d+)(\*)?(?:\^(\d+))?$")
_U = re.compile(r"^u(?:(\d)(\d)|(\d+),(\d+))(?:\^(-?\d+))?$")


@dataclass(frozen=True)
class Word:
    letters: tuple = ()

    def __len__(self):
        return len(self.letters)

    def __add__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def __str__(self):
        return " ".join(_letter_text(x) for x in self.letters) or "1"


def _letter_text(x) -> str:
    if x[0] == "v":
        return f"v{x[1]}"
    if x[0] == "a":
        return f"v{x[1]}*"
    _, i, j, e = x
    return f"u{i}{j}" if e == 1 else f"u{i}{j}^{e}"


def parse(text: str, n: int | None = None) -> Word:
    """Parse whitespace separated tokens such as ``v1``, ``v2*``, ``u12^-1``, ``u21``.

    ``v1^3`` and ``v1*^2`` abbreviate repeated letters and ``1`` is the empty
    word. With ``n`` given, indices are checked against ``1..n``.
    """
    letters = []
    for pos, tok in enumerate(text.split()):
        if tok == "1":
            continue
        mv = _V.match(tok)
        if mv:
            i = int(mv.group(1))
            _check_index(i, n, pos)
            reps = int(mv.group(3)) if mv.group(3) else 1
            letters.extend([("a" if mv.group(2) else "v", i)] * reps)
            continue
        mu = _U.match(tok)
        if mu:
            i = int(mu.group(1) or mu.group(3))
            j = int(mu.group(2) or mu.group(4))
            e = int(mu.group(5)) if mu.group(5) is not None else 1
            _check_index(i, n, pos)
            _check_index(j, n, pos)
            if i == j:
                raise WordSyntaxError(f"twist {tok!r} needs distinct indices", pos)
            if i > j:
                i, j, e = j, i, -e
            if e:
                letters.append(("u", i, j, e))
            continue
        raise WordSyntaxError(f"unknown token {tok!r}", pos)
    return Word(tuple(letters))


def _check_index(i, n, pos):
    if i < 1:
        raise WordSyntaxError(f"index {i} must be at least 1", pos)
    if n is not None and i > n:
        raise WordSyntaxError(f"index {i} exceeds n = {n}", pos)


def _as_word(w) -> Word:
    if isinstance(w, Word):
        return w
    if isinstance(w, NormalForm):
        return w.to_word()
    if isinstance(w, str):
        return parse(w)
    return Word(tuple(w))


@dataclass(frozen=True)
class NormalForm:
    """``u^t`` followed by single-index blocks ``v_i^a v_i*^b`` in ascending i.

    ``t`` and ``blocks`` are sorted tuples ``((i, j), e)`` and ``(i, a, b)``
    holding only non-zero entries.
    """

    t: tuple = ()
    blocks: tuple = ()

    def twist(self, i: int, j: int) -> int:
        return dict(self.t).get((i, j), 0)

    def block(self, i: int):
        for k, a, b in self.blocks:
            if k == i:
                return a, b
        return 0, 0

    def to_word(self) -> Word:
        letters = [("u", i, j, e) for (i, j), e in self.t]
        for i, a, b in self.blocks:
            letters += [("v", i)] * a + [("a", i)] * b
        return Word(tuple(letters))

    def text(self) -> str:
        parts = [f"u{i}{j}" if e == 1 else f"u{i}{j}^{e}" for (i, j), e in self.t]
        for i, a, b in self.blocks:
            if a:
                parts.append(f"v{i}" if a == 1 else f"v{i}^{a}")
            if b:
                parts.append(f"v{i}*" if b == 1 else f"v{i}*^{b}")
        return " ".join(parts) or "1"

    def __str__(self):
        return self.text()

    def to_dict(self) -> dict:
        return {"t": {f"{i},{j}": e for (i, j), e in self.t},
                "blocks": {str(i): [a, b] for i, a, b in self.blocks},
                "text": self.text()}


def normalize(w) -> NormalForm:
    """Rewrite to normal form.

    The strategy is fixed: u-letters are collected first, then v-letters are
    stably sorted by index using leftmost adjacent swaps, then ``v_i* v_i``
    pairs cancel inside each index. Every adjacent swap of letters with
    indices i > j adds ``-ε ε'`` to the exponent of ``u_ji``; summing over all
    inverted pairs gives the same total as performing the swaps one by one.
    """
    w = _as_word(w)
    t = {}
    vs = []
    for x in w.letters:
        if x[0] == "u":
            key = (x[1], x[2])
            t[key] = t.get(key, 0) + x[3]
        else:
            vs.append(x)
    eps = [1 if x[0] == "v" else -1 for x in vs]
    for p in range(len(vs)):
        for q in range(p + 1, len(vs)):
            i, j = vs[p][1], vs[q][1]
            if i > j:
                key = (j, i)
                t[key] = t.get(key, 0) - eps[p] * eps[q]
    blocks = []
    for i in sorted({x[1] for x in vs}):
        a = b = 0
        for x in vs:
            if x[1] != i:
                continue
            if x[0] == "v":
                if b:
                    # v* v cancels; a v following a v* consumes it
                    b -= 1
                else:
                    a += 1
            else:
                b += 1
        if a or b:
            blocks.append((i, a, b))
    return NormalForm(tuple(sorted((k, e) for k, e in t.items() if e)), tuple(blocks))


def words_equal(w1, w2) -> bool:
    return normalize(w1) == normalize(w2)


def adjoint(w) -> Word:
    w = _as_word(w)
    out = []
    for x in reversed(w.letters):
        if x[0] == "v":
            out.append(("a", x[1]))
        elif x[0] == "a":
            out.append(("v", x[1]))
        else:
            out.append(("u", x[1], x[2], -x[3]))
    return Word(tuple(out))


def normal_adjoint(nf: NormalForm) -> NormalForm:
    """Normal form of the adjoint, computed directly from ``nf``.

    Blocks ``(a, b)`` become ``(b, a)``, twists flip sign, and reversing the
    block order of indices i > j adds ``-(b_i - a_i)(b_j - a_j)`` to ``t_ji``.
    """
    t = {k: -e for k, e in nf.t}
    bl = list(nf.blocks)
    for (j, aj, bj) in bl:
        for (i, ai, bi) in bl:
            if i > j:
                t[(j, i)] = t.get((j, i), 0) - (bi - ai) * (bj - aj)
    return NormalForm(tuple(sorted((k, e) for k, e in t.items() if e)),
                      tuple((i, b, a) for i, a, b in bl))


def evaluate(w, T, n_check: int | None = None) -> np.ndarray:
    """Matrix of a word on the truncation ``n_check`` (block diagonal for sums)."""
    w = _as_word(w)
    if n_check is None:
        n_check = max_check_level(T, [w.letters])
    if n_check < 0:
        raise TruncationError("word does not fit in the truncation")
    mats = [M for M, _ in word_blocks(T, w.letters, n_check)]
    return mats[0] if len(mats) == 1 else _block_diag(mats)


def oracle_check(w, T, n_check: int | None = None) -> float:
    """``||evaluate(w) - evaluate(normalize(w))||`` on a common truncation."""
    w = _as_word(w)
    nf = normalize(w).to_word()
    if n_check is None:
        n_check = max_check_level(T, [w.letters, nf.letters])
    if n_check < 0:
        raise TruncationError("word does not fit in the truncation")
    res, _ = compare_polys(T, [(1, w.letters)], [(1, nf.letters)], n_check)
    return res


def random_word(n: int, length: int, rng, u_weight: float = 0.2) -> Word:
    """Random word over the letters for n indices (test data)."""
    letters = []
    for _ in range(length):
        if n >= 2 and rng.random() < u_weight:
            i, j = sorted(rng.choice(np.arange(1, n + 1), size=2, replace=False).tolist())
            letters.append(("u", int(i), int(j), int(rng.choice([-1, 1]))))
        else:
            letters.append(("v" if rng.random() < 0.5 else "a", int(rng.integers(1, n + 1))))
    return Word(tuple(letters))
