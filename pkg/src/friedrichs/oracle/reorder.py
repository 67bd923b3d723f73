"""Normal ordering by brute-force rewriting with the canonical (anti)commutation relations.

This shares nothing with the contraction-config machinery: it repeatedly
replaces the leftmost adjacent ``a_y a*_x`` by ``δ(x,y) ± a*_x a_y`` and
finally sorts each block by label, tracking the exchange sign itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from ..coefficient import Coefficient, ONE
from ..diagram import Diagram
from ..expression import Expression, Term, canonicalize
from ..symbols import KernelKind, Statistics, annihilator, creator

__all__ = ["Letter", "reorder_oracle", "word_expression", "parse_word"]


@dataclass(frozen=True, order=True)
class Letter:
    dagger: bool
    label: str

    def __str__(self):
        return f"{'adag' if self.dagger else 'a'}({self.label})"


def parse_word(text: str) -> list[Letter]:
    """``"a(1) adag(3)"`` → letters; a trailing ``*`` on a label also marks a creator (``"1 3*"``)."""
    out = []
    for tok in text.replace(",", " ").split():
        if tok.startswith("adag(") and tok.endswith(")"):
            out.append(Letter(True, tok[5:-1]))
        elif tok.startswith("a(") and tok.endswith(")"):
            out.append(Letter(False, tok[2:-1]))
        elif tok.endswith("*"):
            out.append(Letter(True, tok[:-1]))
        else:
            out.append(Letter(False, tok))
    return out


def _sort_block(labels: list[str], fermi: bool) -> tuple[int, list[str]]:
    """Insertion sort with exchange sign; returns (0, …) for a repeated fermion."""
    seq = list(labels)
    sign = 1
    for i in range(1, len(seq)):
        j = i
        while j > 0 and seq[j - 1] > seq[j]:
            seq[j - 1], seq[j] = seq[j], seq[j - 1]
            sign = -sign
            j -= 1
    if fermi and len(set(seq)) != len(seq):
        return 0, seq
    return (sign if fermi else 1), seq


def _to_term(coeff: Coefficient, deltas, creators: list[str], annihilators: list[str], kind) -> Term:
    verts = []
    lines = []
    for x, y in deltas:
        verts += [creator(x, kind), annihilator(y, kind)]
        lines.append(((len(verts) - 2, 1), (len(verts) - 1, 1)))
    ext_left = []
    for x in reversed(creators):  # a*_{c1} … a*_{cL} = a*_{σ(L)} … a*_{σ(1)}
        verts.append(creator(x, kind))
        ext_left.append((len(verts) - 1, 1))
    ext_right = []
    for y in annihilators:
        verts.append(annihilator(y, kind))
        ext_right.append((len(verts) - 1, 1))
    if not verts:
        return Term(coeff, Diagram.identity())
    return Term(coeff, Diagram(tuple(verts), tuple(lines), tuple(ext_left), tuple(ext_right)))


def reorder_oracle(
    word: Sequence[Letter] | str, stats, kind: KernelKind | str = KernelKind.POINT
) -> Expression:
    """Normal-ordered Expression of a product of single ladder operators."""
    st = Statistics.parse(stats)
    fermi = st is Statistics.FERMI
    if isinstance(word, str):
        word = parse_word(word)
    kind = KernelKind(kind)
    swap = -1 if fermi else 1
    pending = [(1, (), tuple(word))]
    done: list[tuple[int, tuple, tuple]] = []
    while pending:
        c, deltas, w = pending.pop()
        for i in range(len(w) - 1):
            if not w[i].dagger and w[i + 1].dagger:
                y, x = w[i].label, w[i + 1].label
                pending.append((c, deltas + ((x, y),), w[:i] + w[i + 2 :]))
                pending.append((c * swap, deltas, w[:i] + (w[i + 1], w[i]) + w[i + 2 :]))
                break
        else:
            done.append((c, deltas, w))
    terms = []
    for c, deltas, w in done:
        cre = [l.label for l in w if l.dagger]
        ann = [l.label for l in w if not l.dagger]
        s1, cre = _sort_block(cre, fermi)
        s2, ann = _sort_block(ann, fermi)
        if s1 == 0 or s2 == 0:
            continue
        terms.append(_to_term(ONE * (c * s1 * s2), deltas, cre, ann, kind))
    return canonicalize(Expression(st, terms))


def word_expression(word: Iterable[Letter] | str, stats, kind: KernelKind | str = KernelKind.POINT) -> list[Expression]:
    """Each letter as a single-vertex Expression (inputs for the engine)."""
    st = Statistics.parse(stats)
    if isinstance(word, str):
        word = parse_word(word)
    kind = KernelKind(kind)
    return [
        Expression.of(st, Term.of(creator(l.label, kind) if l.dagger else annihilator(l.label, kind)))
        for l in word
    ]
