"""Statistics, kernel symbols, slot references and the kernel registry."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import threading
from typing import TYPE_CHECKING, NamedTuple, Optional

if TYPE_CHECKING:
    from .diagram import CollapseRecord

__all__ = [
    "Statistics",
    "Side",
    "SlotRef",
    "KernelKind",
    "KernelSymbol",
    "KernelRegistry",
    "Monomial",
    "UNIT",
    "creator",
    "annihilator",
    "MixedStatisticsError",
]


class MixedStatisticsError(ValueError):
    """Operands carry different statistics."""


class Statistics(Enum):
    BOSE = "bose"
    FERMI = "fermi"

    @classmethod
    def parse(cls, value: "Statistics | str") -> "Statistics":
        if isinstance(value, Statistics):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown statistics {value!r}; expected 'bose' or 'fermi'") from None


class Side(Enum):
    LEFT = "L"
    RIGHT = "R"


class SlotRef(NamedTuple):
    """A connector of a diagram vertex; ``index`` is 1-based within its side."""

    vertex: int
    side: Side
    index: int


class KernelKind(str, Enum):
    KERNEL = "kernel"  # opaque f_A
    POINT = "point"  # formal coordinate label, δ-lines stay symbolic
    MODE = "mode"  # discrete lattice mode, δ-lines between modes evaluate


@dataclass(frozen=True)
class KernelSymbol:
    """Kernel f_A with ``n_left`` creation and ``m_right`` annihilation slots.

    Equality ignores provenance: two symbols with the same name, kind and
    arity are the same kernel.
    """

    name: str
    n_left: int
    m_right: int
    kind: KernelKind = KernelKind.KERNEL
    provenance: Optional["CollapseRecord"] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.n_left < 0 or self.m_right < 0:
            raise ValueError("kernel arities must be nonnegative")
        if not isinstance(self.kind, KernelKind):
            object.__setattr__(self, "kind", KernelKind(self.kind))
        if self.kind is not KernelKind.KERNEL and (self.n_left, self.m_right) not in ((1, 0), (0, 1)):
            raise ValueError(f"{self.kind.value} vertices must have arity (1,0) or (0,1)")

    @property
    def key(self) -> tuple:
        return (self.kind.value, self.name, self.n_left, self.m_right)

    @property
    def is_scalar(self) -> bool:
        return self.n_left == 0 and self.m_right == 0

    @property
    def is_unit(self) -> bool:
        return self.is_scalar and self.kind is KernelKind.KERNEL and self.name == "1"

    def adjoint(self) -> "KernelSymbol":
        """Kernel of the adjoint monomial: arities swap, conjugation toggles ``†``."""
        if self.kind is not KernelKind.KERNEL:
            return KernelSymbol(self.name, self.m_right, self.n_left, self.kind)
        if self.is_unit:
            return self
        name = self.name[:-1] if self.name.endswith("†") else self.name + "†"
        return KernelSymbol(name, self.m_right, self.n_left, self.kind)


UNIT = KernelSymbol("1", 0, 0)


def creator(label, kind: KernelKind | str = KernelKind.POINT) -> KernelSymbol:
    """Vertex for a*_label."""
    return KernelSymbol(str(label), 1, 0, KernelKind(kind))


def annihilator(label, kind: KernelKind | str = KernelKind.POINT) -> KernelSymbol:
    """Vertex for a_label."""
    return KernelSymbol(str(label), 0, 1, KernelKind(kind))


class KernelRegistry:
    """Append-only, thread-safe name → symbol table.

    Re-registering an identical symbol is a no-op; reusing a name with a
    different arity or kind raises.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._table: dict[str, KernelSymbol] = {}

    def register(self, sym: KernelSymbol) -> KernelSymbol:
        with self._lock:
            have = self._table.get(sym.name)
            if have is None:
                self._table[sym.name] = sym
                return sym
            if have != sym:
                raise ValueError(
                    f"kernel {sym.name!r} already registered with arity "
                    f"({have.n_left},{have.m_right}) kind {have.kind.value}"
                )
            return have

    def get(self, name: str) -> Optional[KernelSymbol]:
        with self._lock:
            return self._table.get(name)

    def __contains__(self, name: str) -> bool:
        return self.get(name) is not None

    def __len__(self) -> int:
        with self._lock:
            return len(self._table)

    def names(self) -> list[str]:
        with self._lock:
            return sorted(self._table)


@dataclass(frozen=True)
class Monomial:
    """∫ f a*_{x_n}…a*_{x_1} a_{y_1}…a_{y_m} for a single kernel."""

    kernel: KernelSymbol

    @property
    def n(self) -> int:
        return self.kernel.n_left

    @property
    def m(self) -> int:
        return self.kernel.m_right
