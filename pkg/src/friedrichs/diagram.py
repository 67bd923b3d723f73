"""Friedrichs diagrams: vertices with ordered slots, δ-lines and ordered external legs.

Internally a slot is a ``(vertex, index)`` pair; which side it lives on is
implied by where it appears (first entry of a line and ``ext_left`` are
left/creation slots, second entry of a line and ``ext_right`` are
right/annihilation slots). :class:`SlotRef` views are offered for callers
that want the explicit form.

The operator denoted by a diagram with coefficient 1 is

    ∫ Π f_v Π δ(x - y)  a*_{ext_left[L]} … a*_{ext_left[1]} a_{ext_right[1]} … a_{ext_right[L']}
"""

from __future__ import annotations

from dataclasses import dataclass, field
import hashlib
from itertools import permutations, product
from typing import Iterable, Optional

from .configs import inversion_parity
from .symbols import (
    KernelKind,
    KernelRegistry,
    KernelSymbol,
    Monomial,
    Side,
    SlotRef,
    UNIT,
)

__all__ = [
    "Diagram",
    "CollapseRecord",
    "CanonicalForm",
    "canonical_form",
    "from_term",
    "to_term",
    "collapse",
    "classify_legs",
    "is_acyclic",
    "export_dot",
    "render_term",
    "DEFAULT_REGISTRY",
    "InvalidDiagramError",
]

Slot = tuple[int, int]
Line = tuple[Slot, Slot]

DEFAULT_REGISTRY = KernelRegistry()


class InvalidDiagramError(ValueError):
    pass


@dataclass(frozen=True)
class Diagram:
    vertices: tuple[KernelSymbol, ...]
    lines: tuple[Line, ...] = ()
    ext_left: tuple[Slot, ...] = ()
    ext_right: tuple[Slot, ...] = ()

    @classmethod
    def single(cls, kernel: KernelSymbol) -> "Diagram":
        return cls(
            (kernel,),
            (),
            tuple((0, j) for j in range(1, kernel.n_left + 1)),
            tuple((0, k) for k in range(1, kernel.m_right + 1)),
        )

    @classmethod
    def identity(cls) -> "Diagram":
        return cls.single(UNIT)

    @classmethod
    def from_slotrefs(cls, vertices, lines, ext_left, ext_right) -> "Diagram":
        def plain(s: SlotRef, side: Side) -> Slot:
            if s.side is not side:
                raise InvalidDiagramError(f"{s} is on the wrong side (expected {side.name})")
            return (s.vertex, s.index)

        d = cls(
            tuple(vertices),
            tuple((plain(a, Side.LEFT), plain(b, Side.RIGHT)) for a, b in lines),
            tuple(plain(s, Side.LEFT) for s in ext_left),
            tuple(plain(s, Side.RIGHT) for s in ext_right),
        )
        d.validate()
        return d

    # SlotRef views

    @property
    def internal_lines(self) -> tuple[tuple[SlotRef, SlotRef], ...]:
        return tuple(
            (SlotRef(a[0], Side.LEFT, a[1]), SlotRef(b[0], Side.RIGHT, b[1])) for a, b in self.lines
        )

    @property
    def external_left(self) -> tuple[SlotRef, ...]:
        return tuple(SlotRef(v, Side.LEFT, j) for v, j in self.ext_left)

    @property
    def external_right(self) -> tuple[SlotRef, ...]:
        return tuple(SlotRef(v, Side.RIGHT, j) for v, j in self.ext_right)

    @property
    def legs(self) -> tuple[int, int]:
        return len(self.ext_left), len(self.ext_right)

    def validate(self) -> "Diagram":
        """Check the partition property; returns self for chaining."""
        nv = len(self.vertices)
        seen_l: set[Slot] = set()
        seen_r: set[Slot] = set()

        def take(slot: Slot, side: str, seen: set[Slot]):
            v, j = slot
            if not 0 <= v < nv:
                raise InvalidDiagramError(f"slot {slot} refers to missing vertex")
            bound = self.vertices[v].n_left if side == "L" else self.vertices[v].m_right
            if not 1 <= j <= bound:
                raise InvalidDiagramError(f"{side}-slot {slot} outside 1..{bound}")
            if slot in seen:
                raise InvalidDiagramError(f"{side}-slot {slot} used twice")
            seen.add(slot)

        for a, b in self.lines:
            take(a, "L", seen_l)
            take(b, "R", seen_r)
        for s in self.ext_left:
            take(s, "L", seen_l)
        for s in self.ext_right:
            take(s, "R", seen_r)
        n_tot = sum(v.n_left for v in self.vertices)
        m_tot = sum(v.m_right for v in self.vertices)
        if len(seen_l) != n_tot or len(seen_r) != m_tot:
            raise InvalidDiagramError("some slots are neither internal nor external")
        return self

    def relabel(self, perm: Iterable[int]) -> "Diagram":
        """Same diagram with vertex ``i`` renumbered ``perm[i]``."""
        perm = list(perm)
        verts = [None] * len(perm)
        for old, new in enumerate(perm):
            verts[new] = self.vertices[old]
        mv = lambda s: (perm[s[0]], s[1])  # noqa: E731
        return Diagram(
            tuple(verts),
            tuple((mv(a), mv(b)) for a, b in self.lines),
            tuple(map(mv, self.ext_left)),
            tuple(map(mv, self.ext_right)),
        )

    def adjoint(self) -> "Diagram":
        """Diagram of the adjoint operator (coefficient conjugation is the caller's job)."""
        return Diagram(
            tuple(v.adjoint() for v in self.vertices),
            tuple((b, a) for a, b in self.lines),
            self.ext_right,
            self.ext_left,
        )


# --- canonical form -------------------------------------------------------


@dataclass(frozen=True)
class CanonicalForm:
    diagram: Optional[Diagram]  # None when the term vanishes identically
    sign: int
    key: tuple


_ZERO_FORM = CanonicalForm(None, 0, ())


def _evaluate_modes(d: Diagram) -> Optional[Diagram]:
    """Resolve δ-lines between discrete modes and drop unit vertices; None if zero."""
    verts = d.vertices
    drop: set[int] = set()
    keep_lines: list[Line] = []
    for a, b in d.lines:
        va, vb = verts[a[0]], verts[b[0]]
        if va.kind is KernelKind.MODE and vb.kind is KernelKind.MODE:
            if va.name != vb.name:
                return None
            drop.add(a[0])
            drop.add(b[0])
        else:
            keep_lines.append((a, b))
    for i, v in enumerate(verts):
        if v.is_unit:
            drop.add(i)
    if not drop:
        return d
    remap = {}
    new_verts = []
    for i, v in enumerate(verts):
        if i not in drop:
            remap[i] = len(new_verts)
            new_verts.append(v)
    mv = lambda s: (remap[s[0]], s[1])  # noqa: E731
    return Diagram(
        tuple(new_verts),
        tuple((mv(a), mv(b)) for a, b in keep_lines),
        tuple(map(mv, d.ext_left)),
        tuple(map(mv, d.ext_right)),
    )


class _Graph:
    __slots__ = ("verts", "left", "right", "keys")

    def __init__(self, d: Diagram):
        self.verts = d.vertices
        self.keys = [v.key for v in d.vertices]
        self.left = [[None] * v.n_left for v in d.vertices]
        self.right = [[None] * v.m_right for v in d.vertices]
        for (v, j), (w, k) in d.lines:
            self.left[v][j - 1] = (w, k)
            self.right[w][k - 1] = (v, j)

    def components(self) -> list[list[int]]:
        n = len(self.verts)
        comp = [-1] * n
        out = []
        for s in range(n):
            if comp[s] >= 0:
                continue
            cid = len(out)
            stack, members = [s], []
            comp[s] = cid
            while stack:
                v = stack.pop()
                members.append(v)
                for nb in self.left[v] + self.right[v]:
                    if nb is not None and comp[nb[0]] < 0:
                        comp[nb[0]] = cid
                        stack.append(nb[0])
            out.append(sorted(members))
        return out

    def bfs(self, start: int) -> list[int]:
        order = [start]
        seen = {start}
        i = 0
        while i < len(order):
            v = order[i]
            i += 1
            for nb in self.left[v]:
                if nb is not None and nb[0] not in seen:
                    seen.add(nb[0])
                    order.append(nb[0])
            for nb in self.right[v]:
                if nb is not None and nb[0] not in seen:
                    seen.add(nb[0])
                    order.append(nb[0])
        return order

    def encode(self, order: list[int]) -> tuple:
        pos = {v: i for i, v in enumerate(order)}
        enc = []
        for v in order:
            lt = tuple((-1, 0) if nb is None else (pos[nb[0]], nb[1]) for nb in self.left[v])
            rt = tuple((-1, 0) if nb is None else (pos[nb[0]], nb[1]) for nb in self.right[v])
            enc.append((self.keys[v], lt, rt))
        return tuple(enc)


def _component_forms(g: _Graph, members: list[int]) -> tuple[tuple, list[list[int]]]:
    """Minimal BFS encoding of a component and every labeling achieving it."""
    kmin = min(g.keys[v] for v in members)
    best = None
    orders: list[list[int]] = []
    for s in members:
        if g.keys[s] != kmin:
            continue
        order = g.bfs(s)
        enc = g.encode(order)
        if best is None or enc < best:
            best, orders = enc, [order]
        elif enc == best:
            orders.append(order)
    return best, orders


def _leg_parity(legs: tuple[Slot, ...], pos: dict[int, int]) -> int:
    ranks = [(pos[v], j) for v, j in legs]
    order = sorted(range(len(ranks)), key=ranks.__getitem__)
    return inversion_parity(order)


def _layout(g: _Graph, d: Diagram):
    comps = []
    for members in g.components():
        enc, orders = _component_forms(g, members)
        comps.append((enc, orders))
    comps.sort(key=lambda c: c[0])
    return comps


def canonical_form(d: Diagram, fermi: bool) -> CanonicalForm:
    """Structure-only relabeling of ``d``.

    Returns the canonical diagram, the sign picked up by reordering external
    legs (always +1 for bosons), and a hashable, totally ordered key. For
    fermions a diagram with an odd automorphism is identically zero.
    """
    d2 = _evaluate_modes(d)
    if d2 is None:
        return _ZERO_FORM
    d = d2
    g = _Graph(d)
    comps = _layout(g, d)

    pos: dict[int, int] = {}
    for enc, orders in comps:
        for v in orders[0]:
            pos[v] = len(pos)

    sign = 1
    if fermi:
        sign = _leg_parity(d.ext_left, pos) * _leg_parity(d.ext_right, pos)
        # odd automorphisms kill the term
        for enc, orders in comps:
            for alt in orders[1:]:
                alt_pos = dict(pos)
                base = pos[orders[0][0]]
                for i, v in enumerate(alt):
                    alt_pos[v] = base + i
                if _leg_parity(d.ext_left, alt_pos) * _leg_parity(d.ext_right, alt_pos) != sign:
                    return _ZERO_FORM
        for (e1, o1), (e2, _) in zip(comps, comps[1:]):
            if e1 == e2:
                members = set(o1[0])
                n_ext = sum(1 for v, _ in d.ext_left if v in members) + sum(
                    1 for v, _ in d.ext_right if v in members
                )
                if n_ext & 1:
                    return _ZERO_FORM

    verts = [None] * len(pos)
    for v, p in pos.items():
        verts[p] = d.vertices[v]
    mv = lambda s: (pos[s[0]], s[1])  # noqa: E731
    canon = Diagram(
        tuple(verts),
        tuple(sorted((mv(a), mv(b)) for a, b in d.lines)),
        tuple(sorted(map(mv, d.ext_left))),
        tuple(sorted(map(mv, d.ext_right))),
    )
    key = (
        len(canon.ext_left) + len(canon.ext_right),
        len(canon.ext_left),
        len(canon.vertices),
        tuple(enc for enc, _ in comps),
    )
    return CanonicalForm(canon, sign, key)


# --- term views -----------------------------------------------------------


def from_term(t) -> Diagram:
    from .expression import Term

    if not isinstance(t, Term):
        raise TypeError("from_term expects a Term")
    return t.diagram


def to_term(d: Diagram, coeff=1):
    from .expression import Term
    from .coefficient import Coefficient

    return Term(Coefficient.coerce(coeff), d)


# --- collapse -------------------------------------------------------------


@dataclass(frozen=True)
class CollapseRecord:
    source: Diagram
    composite: KernelSymbol
    slot_map: dict = field(compare=False, hash=False)


def _collapse_name(d: Diagram) -> str:
    g = _Graph(d)
    comps = _layout(g, d)
    # try every labeling that realizes the canonical key; keep the smallest leg listing
    groups: list[list[int]] = []
    for i, (enc, _) in enumerate(comps):
        if groups and comps[groups[-1][0]][0] == enc:
            groups[-1].append(i)
        else:
            groups.append([i])
    best = None
    choice_sets = [range(len(orders)) for _, orders in comps]
    count = 0
    for starts in product(*choice_sets):
        for arrangement in product(*(permutations(gr) for gr in groups)):
            count += 1
            if count > 5000:
                break
            seq = [c for arr in arrangement for c in arr]
            pos: dict[int, int] = {}
            for ci in seq:
                for v in comps[ci][1][starts[ci]]:
                    pos[v] = len(pos)
            mv = lambda s: (pos[s[0]], s[1])  # noqa: E731
            cand = (
                tuple(map(mv, d.ext_left)),
                tuple(map(mv, d.ext_right)),
            )
            if best is None or cand < best:
                best = cand
    blob = repr((tuple(enc for enc, _ in comps), best)).encode()
    return "G_" + hashlib.sha256(blob).hexdigest()[:16]


def collapse(d: Diagram, registry: KernelRegistry = DEFAULT_REGISTRY) -> tuple[Monomial, CollapseRecord]:
    """Replace a diagram by a single vertex carrying the composite kernel f_G.

    Composite slot ``j`` on the left is the ``j``-th entry of ``ext_left``,
    so the external ordering (and with it the operator) is unchanged.
    """
    d.validate()
    natural = (
        len(d.vertices) == 1
        and not d.lines
        and d.ext_left == tuple((0, j) for j in range(1, d.vertices[0].n_left + 1))
        and d.ext_right == tuple((0, k) for k in range(1, d.vertices[0].m_right + 1))
    )
    if natural:
        k = d.vertices[0]
        mapping = {SlotRef(0, Side.LEFT, j): SlotRef(0, Side.LEFT, j) for j in range(1, k.n_left + 1)}
        mapping.update(
            {SlotRef(0, Side.RIGHT, j): SlotRef(0, Side.RIGHT, j) for j in range(1, k.m_right + 1)}
        )
        return Monomial(k), CollapseRecord(d, k, mapping)
    name = _collapse_name(d)
    slot_map = {}
    for j, (v, i) in enumerate(d.ext_left, start=1):
        slot_map[SlotRef(v, Side.LEFT, i)] = SlotRef(0, Side.LEFT, j)
    for j, (v, i) in enumerate(d.ext_right, start=1):
        slot_map[SlotRef(v, Side.RIGHT, i)] = SlotRef(0, Side.RIGHT, j)
    record = CollapseRecord(d, None, slot_map)  # type: ignore[arg-type]
    composite = KernelSymbol(name, len(d.ext_left), len(d.ext_right), KernelKind.KERNEL, record)
    object.__setattr__(record, "composite", composite)
    composite = registry.register(composite)
    return Monomial(composite), composite.provenance


# --- structure ------------------------------------------------------------


def classify_legs(d: Diagram) -> tuple[int, int]:
    return len(d.ext_left), len(d.ext_right)


def is_acyclic(d: Diagram) -> bool:
    """No cycle in the vertex multigraph of internal lines (parallel lines and loops count)."""
    parent = list(range(len(d.vertices)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (v, _), (w, _) in d.lines:
        rv, rw = find(v), find(w)
        if rv == rw:
            return False
        parent[rv] = rw
    return True


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(d: Diagram, name: str = "G") -> str:
    """Deterministic Graphviz text; external legs are ranked left/right."""
    out = [f'graph "{_dot_escape(name)}" {{', "  rankdir=LR;", "  node [shape=circle];"]
    for i, v in enumerate(d.vertices):
        label = f"{v.name} ({v.n_left},{v.m_right})"
        if v.kind is not KernelKind.KERNEL:
            label = ("a*" if v.n_left else "a") + f"[{v.name}]"
        out.append(f'  v{i} [label="{_dot_escape(label)}"];')
    if d.ext_left:
        out.append("  { rank=min; " + " ".join(f"L{j}" for j in range(1, len(d.ext_left) + 1)) + "; }")
    if d.ext_right:
        out.append("  { rank=max; " + " ".join(f"R{j}" for j in range(1, len(d.ext_right) + 1)) + "; }")
    for j, (v, i) in enumerate(d.ext_left, start=1):
        out.append(f'  L{j} [shape=point, xlabel="L{j}"];')
        out.append(f'  L{j} -- v{v} [style=solid, taillabel="", headlabel="x{i}"];')
    for j, (v, i) in enumerate(d.ext_right, start=1):
        out.append(f'  R{j} [shape=point, xlabel="R{j}"];')
        out.append(f'  v{v} -- R{j} [style=solid, taillabel="y{i}"];')
    for (v, i), (w, k) in d.lines:
        out.append(f'  v{v} -- v{w} [style=dashed, color=red, taillabel="x{i}", headlabel="y{k}"];')
    out.append("}")
    return "\n".join(out) + "\n"


def render_term(coeff, d: Diagram) -> str:
    """Readable one-line rendering, e.g. ``-1 δ(2,3) a*(4) a(1)``."""
    verts = d.vertices
    var: dict[tuple[int, str, int], str] = {}
    deltas = []
    fresh = iter(f"z{i}" for i in range(1, 10_000))

    def label_of(v: int):
        k = verts[v]
        return k.name if k.kind is not KernelKind.KERNEL else None

    for (v, j), (w, k) in d.lines:
        lv, lw = label_of(v), label_of(w)
        if lv is not None and lw is not None:
            deltas.append(f"δ({lv},{lw})")
            continue
        name = lv if lv is not None else lw if lw is not None else next(fresh)
        var[(v, "L", j)] = name
        var[(w, "R", k)] = name
    for n, (v, j) in enumerate(d.ext_left, start=1):
        var.setdefault((v, "L", j), label_of(v) or f"x{n}")
    for n, (v, k) in enumerate(d.ext_right, start=1):
        var.setdefault((v, "R", k), label_of(v) or f"y{n}")
    factors = []
    for i, k in enumerate(verts):
        if k.kind is not KernelKind.KERNEL:
            continue
        if k.is_scalar:
            factors.append(k.name)
            continue
        xs = ",".join(var[(i, "L", j)] for j in range(1, k.n_left + 1))
        ys = ",".join(var[(i, "R", j)] for j in range(1, k.m_right + 1))
        factors.append(f"{k.name}[{xs}|{ys}]")
    ops = [f"a*({var[(v, 'L', j)]})" for v, j in reversed(d.ext_left)]
    ops += [f"a({var[(v, 'R', k)]})" for v, k in d.ext_right]
    body = " ".join(deltas + factors + ops) or "1"
    return f"{coeff} {body}"
