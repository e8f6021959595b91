"""Open ZX diagrams as port multigraphs.

A diagram is a set of generators (green spiders, Hadamard boxes, cups,
caps, grounds) wired together by named edges, plus ordered boundary
wires.  Identity and swap are pure wiring, not generators: an edge may
run straight from an input slot to an output slot.

Every edge name occurs exactly twice across the structure: once at a
"top" attachment (a generator output port or an input boundary slot)
and once at a "bottom" attachment (a generator input port or an output
boundary slot).  Diagrams are read top to bottom, so a token moving
"down" an edge heads for its bottom attachment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum, IntEnum
from fractions import Fraction
from functools import cached_property
from typing import Iterator

from .errors import (
    ArityError,
    CompositionError,
    DiagramError,
    PathLimitExceeded,
)

DEFAULT_PATH_LIMIT = 200_000


class Dir(IntEnum):
    """Travel direction along an edge: DOWN is top-to-bottom."""

    DOWN = 0
    UP = 1

    @property
    def flipped(self) -> "Dir":
        return Dir.UP if self is Dir.DOWN else Dir.DOWN

    @property
    def arrow(self) -> str:
        return "↓" if self is Dir.DOWN else "↑"


class GenKind(str, Enum):
    Z = "Z"
    H = "H"
    CUP = "cup"
    CAP = "cap"
    GROUND = "ground"


@dataclass(frozen=True)
class Angle:
    """A spider phase: either an exact rational multiple of pi or a float.

    Exactly one of `pi_multiple` / `raw_radians` is set.  Exact angles
    survive serialization byte-identically; floats are only produced
    when the user writes a decimal.
    """

    pi_multiple: Fraction | None = None
    raw_radians: float | None = None

    def __post_init__(self):
        if (self.pi_multiple is None) == (self.raw_radians is None):
            raise ValueError("Angle needs exactly one of pi_multiple, raw_radians")

    @staticmethod
    def zero() -> "Angle":
        return Angle(pi_multiple=Fraction(0))

    @staticmethod
    def pi(multiple: Fraction | int | str = 1) -> "Angle":
        return Angle(pi_multiple=Fraction(multiple))

    @staticmethod
    def radians(value: float) -> "Angle":
        return Angle(raw_radians=float(value))

    @staticmethod
    def of(value: "Angle | float | int | Fraction | None") -> "Angle":
        """Coerce: None -> 0, Fraction -> multiple of pi, float/int -> radians."""
        if value is None:
            return Angle.zero()
        if isinstance(value, Angle):
            return value
        if isinstance(value, Fraction):
            return Angle(pi_multiple=value)
        return Angle(raw_radians=float(value))

    @property
    def to_radians(self) -> float:
        if self.pi_multiple is not None:
            return float(self.pi_multiple) * math.pi
        return self.raw_radians

    @property
    def is_zero(self) -> bool:
        return self.to_radians == 0.0

    def __neg__(self) -> "Angle":
        if self.pi_multiple is not None:
            return Angle(pi_multiple=-self.pi_multiple)
        return Angle(raw_radians=-self.raw_radians)

    def __str__(self) -> str:
        if self.pi_multiple is not None:
            f = self.pi_multiple
            if f == 0:
                return "0"
            num = "" if abs(f.numerator) == 1 else str(abs(f.numerator))
            sign = "-" if f < 0 else ""
            den = "" if f.denominator == 1 else f"/{f.denominator}"
            return f"{sign}{num}pi{den}"
        return repr(self.raw_radians)


# Arity table: kind -> (n_inputs, n_outputs); None means free.
_FIXED_ARITY = {
    GenKind.H: (1, 1),
    GenKind.CUP: (2, 0),
    GenKind.CAP: (0, 2),
    GenKind.GROUND: (1, 0),
}


@dataclass(frozen=True)
class Generator:
    """One node: a kind, ordered input edges, ordered output edges.

    Only Z spiders carry an angle.
    """

    kind: GenKind
    ins: tuple[str, ...]
    outs: tuple[str, ...]
    angle: Angle | None = None

    def __post_init__(self):
        if self.kind in _FIXED_ARITY:
            n, m = _FIXED_ARITY[self.kind]
            if len(self.ins) != n or len(self.outs) != m:
                raise ArityError(
                    f"{self.kind.value} must be {n}->{m}, "
                    f"got {len(self.ins)}->{len(self.outs)}"
                )
            if self.angle is not None:
                raise ArityError(f"{self.kind.value} takes no angle")
        elif self.kind is GenKind.Z:
            if self.angle is None:
                object.__setattr__(self, "angle", Angle.zero())
        else:
            raise ArityError(f"unknown generator kind {self.kind!r}")

    @property
    def arity(self) -> int:
        return len(self.ins) + len(self.outs)

    def __str__(self) -> str:
        if self.kind is GenKind.Z:
            return f"Z({len(self.ins)},{len(self.outs)},{self.angle})"
        return self.kind.value


# An attachment point of an edge end:
#   ("gen", gen_index, "in"|"out", port)   generator port
#   ("in", slot) / ("out", slot)           boundary slot
Endpoint = tuple


def vertex_of(endpoint: Endpoint) -> tuple:
    """Collapse an endpoint to its vertex: ("gen", i) or a boundary slot."""
    if endpoint[0] == "gen":
        return ("gen", endpoint[1])
    return endpoint


@dataclass(frozen=True)
class Diagram:
    """An open diagram.  Immutable; all edits build new diagrams."""

    generators: tuple[Generator, ...] = ()
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        self._validate()

    def _validate(self) -> None:
        tops: dict[str, Endpoint] = {}
        bottoms: dict[str, Endpoint] = {}

        def add(table: dict, name: str, endpoint: Endpoint, role: str) -> None:
            if not isinstance(name, str) or not name:
                raise DiagramError(f"bad edge name {name!r}")
            if name in table:
                raise DiagramError(
                    f"edge {name!r} has two {role} attachments: "
                    f"{table[name]} and {endpoint}"
                )
            table[name] = endpoint

        for k, e in enumerate(self.inputs):
            add(tops, e, ("in", k), "top")
        for k, e in enumerate(self.outputs):
            add(bottoms, e, ("out", k), "bottom")
        for i, g in enumerate(self.generators):
            for p, e in enumerate(g.ins):
                add(bottoms, e, ("gen", i, "in", p), "bottom")
            for p, e in enumerate(g.outs):
                add(tops, e, ("gen", i, "out", p), "top")
        if set(tops) != set(bottoms):
            dangling = set(tops) ^ set(bottoms)
            raise DiagramError(f"dangling edge ends: {sorted(dangling)}")
        object.__setattr__(self, "_tops", tops)
        object.__setattr__(self, "_bottoms", bottoms)

    # -- derived structure ------------------------------------------------

    def top_of(self, edge: str) -> Endpoint:
        """The top attachment (generator out-port or input slot)."""
        return self._tops[edge]

    def bottom_of(self, edge: str) -> Endpoint:
        """The bottom attachment (generator in-port or output slot)."""
        return self._bottoms[edge]

    @cached_property
    def edge_order(self) -> tuple[str, ...]:
        """Edges in first-occurrence order: inputs, generator ports, outputs."""
        seen: dict[str, None] = {}
        for e in self.inputs:
            seen.setdefault(e)
        for g in self.generators:
            for e in g.ins:
                seen.setdefault(e)
            for e in g.outs:
                seen.setdefault(e)
        for e in self.outputs:
            seen.setdefault(e)
        return tuple(seen)

    @property
    def edges(self) -> frozenset[str]:
        return frozenset(self.edge_order)

    @property
    def n_inputs(self) -> int:
        return len(self.inputs)

    @property
    def n_outputs(self) -> int:
        return len(self.outputs)

    @cached_property
    def incidence(self) -> dict[tuple, tuple[tuple[str, str], ...]]:
        """vertex -> ((edge, "top"|"bottom"), ...) attachments at that vertex."""
        table: dict[tuple, list] = {}
        for e in self.edge_order:
            for which, endpoint in (("top", self.top_of(e)), ("bottom", self.bottom_of(e))):
                table.setdefault(vertex_of(endpoint), []).append((e, which))
        for i in range(len(self.generators)):
            table.setdefault(("gen", i), [])
        return {v: tuple(atts) for v, atts in table.items()}

    def endpoints(self, edge: str) -> tuple[Endpoint, Endpoint]:
        return (self.top_of(edge), self.bottom_of(edge))

    def has_ground(self) -> bool:
        return any(g.kind is GenKind.GROUND for g in self.generators)

    def __rshift__(self, other: "Diagram") -> "Diagram":
        return compose(self, other)

    def __matmul__(self, other: "Diagram") -> "Diagram":
        return tensor(self, other)

    def __str__(self) -> str:
        gens = ", ".join(str(g) for g in self.generators)
        return (
            f"Diagram({len(self.inputs)}->{len(self.outputs)}, "
            f"gens=[{gens}], edges={len(self.edge_order)})"
        )


# -- constructors ---------------------------------------------------------


def make_generator(
    kind: GenKind | str,
    n_in: int | None = None,
    n_out: int | None = None,
    angle: "Angle | float | int | Fraction | None" = None,
) -> Diagram:
    """A single generator with fresh boundary edges a1..an / b1..bm."""
    kind = GenKind(kind)
    if kind in _FIXED_ARITY:
        fn, fm = _FIXED_ARITY[kind]
        if n_in is not None and n_in != fn or n_out is not None and n_out != fm:
            raise ArityError(f"{kind.value} is always {fn}->{fm}")
        n_in, n_out = fn, fm
        ang = None
        if angle is not None:
            raise ArityError(f"{kind.value} takes no angle")
    else:
        if n_in is None or n_out is None or n_in < 0 or n_out < 0:
            raise ArityError("Z spider needs n_in >= 0 and n_out >= 0")
        ang = Angle.of(angle)
    ins = tuple(f"a{i + 1}" for i in range(n_in))
    outs = tuple(f"b{i + 1}" for i in range(n_out))
    gen = Generator(kind, ins, outs, ang)
    return Diagram((gen,), ins, outs)


def empty_diagram() -> Diagram:
    return Diagram((), (), ())


def identity_wire() -> Diagram:
    """One bare wire from input slot 0 to output slot 0."""
    return Diagram((), ("a1",), ("a1",))


def swap_wires() -> Diagram:
    """Two bare wires crossing: inputs (a1,a2) exit as (a2,a1)."""
    return Diagram((), ("a1", "a2"), ("a2", "a1"))


def red_spider(
    n_in: int,
    n_out: int,
    angle: "Angle | float | int | Fraction | None" = None,
) -> Diagram:
    """Red spider by colour change: H on every leg of a green spider."""
    d: Diagram = empty_diagram()
    for _ in range(n_in):
        d = tensor(d, make_generator(GenKind.H))
    d = compose(d, make_generator(GenKind.Z, n_in, n_out, angle))
    hs: Diagram = empty_diagram()
    for _ in range(n_out):
        hs = tensor(hs, make_generator(GenKind.H))
    return compose(d, hs)


# -- renaming -------------------------------------------------------------


def rename_edges(d: Diagram, mapping: dict[str, str]) -> Diagram:
    """Apply a simultaneous edge rename; names must stay pairwise distinct."""

    def r(e: str) -> str:
        return mapping.get(e, e)

    new_names = [r(e) for e in d.edge_order]
    if len(set(new_names)) != len(new_names):
        raise DiagramError("rename would collide edge names")
    gens = tuple(
        replace(g, ins=tuple(r(e) for e in g.ins), outs=tuple(r(e) for e in g.outs))
        for g in d.generators
    )
    return Diagram(gens, tuple(r(e) for e in d.inputs), tuple(r(e) for e in d.outputs))


def _fresh_namer(taken: set[str]) -> "Iterator[str]":
    k = 1
    while True:
        name = f"e{k}"
        k += 1
        if name not in taken:
            taken.add(name)
            yield name


def canonical_relabel(d: Diagram) -> Diagram:
    """Deterministic names: inputs a1.., outputs b1.. (by slot), internal e1..

    A direct input-to-output wire keeps its a-name on both boundaries.
    """
    mapping: dict[str, str] = {}
    for k, e in enumerate(d.inputs):
        mapping[e] = f"a{k + 1}"
    for k, e in enumerate(d.outputs):
        if e not in mapping:
            mapping[e] = f"b{k + 1}"
    taken = set(mapping.values())
    fresh = _fresh_namer(taken)
    for e in d.edge_order:
        if e not in mapping:
            mapping[e] = next(fresh)
    return rename_edges(d, mapping)


def _merge_renamed(base_names: set[str], d2: Diagram, pinned: dict[str, str]) -> Diagram:
    """Rename d2's edges so they avoid base_names; `pinned` renames win."""
    taken = set(base_names) | set(pinned.values())
    mapping = dict(pinned)
    fresh = _fresh_namer(taken)
    for e in d2.edge_order:
        if e in mapping:
            continue
        if e not in taken:
            mapping[e] = e
            taken.add(e)
        else:
            mapping[e] = next(fresh)
    return rename_edges(d2, mapping)


# -- composition ----------------------------------------------------------


def compose(d1: Diagram, d2: Diagram) -> Diagram:
    """Sequential composition, d1 on top: d1's outputs feed d2's inputs.

    Joined wires fuse into single edges keeping d1's output names; d2's
    other names survive unless they collide with d1's.
    """
    if len(d1.outputs) != len(d2.inputs):
        raise CompositionError(
            f"cannot compose {len(d1.outputs)} outputs into {len(d2.inputs)} inputs"
        )
    pinned = {e2: e1 for e2, e1 in zip(d2.inputs, d1.outputs)}
    d2r = _merge_renamed(set(d1.edge_order), d2, pinned)
    return Diagram(
        d1.generators + d2r.generators,
        d1.inputs,
        d2r.outputs,
    )


def tensor(d1: Diagram, d2: Diagram) -> Diagram:
    """Side-by-side composition; d1's wires come first (most significant)."""
    d2r = _merge_renamed(set(d1.edge_order), d2, {})
    return Diagram(
        d1.generators + d2r.generators,
        d1.inputs + d2r.inputs,
        d1.outputs + d2r.outputs,
    )


# -- paths and cycles -----------------------------------------------------


@dataclass(frozen=True)
class Path:
    """A vertex-simple trail: edges plus per-edge travel direction.

    Consecutive edges meet at a shared generator, and every vertex
    touched (including the two free ends) is distinct.
    """

    edges: tuple[str, ...]
    dirs: tuple[Dir, ...]

    def __post_init__(self):
        if len(self.edges) != len(self.dirs) or not self.edges:
            raise DiagramError("path needs one direction per edge, and >= 1 edge")

    def __len__(self) -> int:
        return len(self.edges)

    def reversed(self) -> "Path":
        return type(self)(
            tuple(reversed(self.edges)),
            tuple(d.flipped for d in reversed(self.dirs)),
        )

    def orientation_of(self, edge: str) -> Dir | None:
        """Travel direction of `edge` in this path, or None if absent."""
        try:
            return self.dirs[self.edges.index(edge)]
        except ValueError:
            return None

    def __str__(self) -> str:
        return ";".join(f"{e}{d.arrow}" for e, d in zip(self.edges, self.dirs))


@dataclass(frozen=True)
class Cycle(Path):
    """A closed path: the head of the last edge is the tail of the first."""


def _tail_head(d: Diagram, edge: str, direction: Dir) -> tuple[tuple, tuple]:
    top = vertex_of(d.top_of(edge))
    bottom = vertex_of(d.bottom_of(edge))
    return (top, bottom) if direction is Dir.DOWN else (bottom, top)


def path_vertices(d: Diagram, p: Path) -> list[tuple]:
    """Vertex sequence visited by p (length len(p)+1)."""
    verts = []
    for e, o in zip(p.edges, p.dirs):
        tail, head = _tail_head(d, e, o)
        if not verts:
            verts.append(tail)
        verts.append(head)
    return verts


def validate_path(d: Diagram, p: Path) -> None:
    """Raise DiagramError unless p is a valid path (or cycle) in d."""
    verts = path_vertices(d, p)
    run = None
    for e, o in zip(p.edges, p.dirs):
        tail, head = _tail_head(d, e, o)
        if run is not None and tail != run:
            raise DiagramError(f"path breaks at {e}: {tail} != {run}")
        if run is not None and tail[0] != "gen":
            raise DiagramError("path passes through a boundary slot")
        run = head
    closed = verts[0] == verts[-1] and len(verts) > 1
    interior = verts[:-1] if closed else verts
    if len(set(interior)) != len(interior):
        raise DiagramError("path revisits a vertex")
    if len(set(p.edges)) != len(p.edges):
        raise DiagramError("path repeats an edge")
    if isinstance(p, Cycle):
        if not closed:
            raise DiagramError("cycle does not close")
        for v in interior:
            if v[0] != "gen":
                raise DiagramError("cycle passes through a boundary slot")
    elif closed:
        raise DiagramError("path closes on itself; use Cycle")


def _leaving(d: Diagram, vertex: tuple, via: str | None) -> list[tuple[str, Dir]]:
    """Edges leaving `vertex`, excluding the arrival edge `via`."""
    if vertex[0] != "gen":
        return []
    out = []
    for e, which in d.incidence[vertex]:
        if e == via:
            continue
        out.append((e, Dir.DOWN if which == "top" else Dir.UP))
    return out


def _iter_directed_paths(
    d: Diagram, start: tuple[str, Dir], limit_counter: list[int], cap: int
) -> Iterator[tuple[tuple[str, Dir], ...]]:
    """All vertex-simple directed paths beginning with `start`."""
    e0, o0 = start
    tail0, head0 = _tail_head(d, e0, o0)
    if tail0 == head0:  # self-loop: in no path
        return
    stack: list[tuple[tuple, tuple, frozenset]] = [
        (((e0, o0),), head0, frozenset((tail0, head0)))
    ]
    while stack:
        steps, head, visited = stack.pop()
        limit_counter[0] += 1
        if limit_counter[0] > cap:
            raise PathLimitExceeded(f"more than {cap} paths")
        yield steps
        for e, o in _leaving(d, head, steps[-1][0]):
            _, nxt = _tail_head(d, e, o)
            if nxt in visited:
                continue
            stack.append((steps + ((e, o),), nxt, visited | {nxt}))


def enumerate_paths(d: Diagram, max_paths: int = DEFAULT_PATH_LIMIT) -> list[Path]:
    """Every path of d, one representative per direction-reversal pair."""
    seen = set()
    out = []
    counter = [0]
    for e in d.edge_order:
        for o in (Dir.DOWN, Dir.UP):
            for steps in _iter_directed_paths(d, (e, o), counter, max_paths):
                rev = tuple((f, q.flipped) for f, q in reversed(steps))
                key = min(steps, rev)
                if key in seen:
                    continue
                seen.add(key)
                out.append(Path(tuple(s[0] for s in key), tuple(s[1] for s in key)))
    return out


def paths_between(
    d: Diagram, e0: str, en: str, max_paths: int = DEFAULT_PATH_LIMIT
) -> list[Path]:
    """All directed paths whose first edge is e0 and last edge is en."""
    if e0 not in d.edges or en not in d.edges:
        raise DiagramError(f"unknown edge in ({e0!r}, {en!r})")
    out = []
    counter = [0]
    for o in (Dir.DOWN, Dir.UP):
        for steps in _iter_directed_paths(d, (e0, o), counter, max_paths):
            if steps[-1][0] == en:
                out.append(Path(tuple(s[0] for s in steps), tuple(s[1] for s in steps)))
    return out


def distance(d: Diagram, e0: str, en: str) -> float:
    """Edges-minus-one along a shortest path from e0 to en; inf if none."""
    if e0 not in d.edges or en not in d.edges:
        raise DiagramError(f"unknown edge in ({e0!r}, {en!r})")
    if e0 == en:
        return 0
    from collections import deque

    queue = deque([((e0, Dir.DOWN), 0), ((e0, Dir.UP), 0)])
    seen = {(e0, Dir.DOWN), (e0, Dir.UP)}
    while queue:
        (e, o), dist = queue.popleft()
        _, head = _tail_head(d, e, o)
        for f, q in _leaving(d, head, e):
            if f == en:
                return dist + 1
            if (f, q) not in seen:
                seen.add((f, q))
                queue.append(((f, q), dist + 1))
    return math.inf


def enumerate_cycles(d: Diagram, max_cycles: int = DEFAULT_PATH_LIMIT) -> list[Cycle]:
    """Every simple cycle, one representative per rotation/reversal class."""
    seen = set()
    out = []
    counter = [0]

    def canonical(steps: tuple[tuple[str, Dir], ...]) -> tuple:
        variants = []
        for seq in (steps, tuple((f, q.flipped) for f, q in reversed(steps))):
            for r in range(len(seq)):
                variants.append(seq[r:] + seq[:r])
        return min(variants)

    for e in d.edge_order:
        for o in (Dir.DOWN, Dir.UP):
            tail0, head0 = _tail_head(d, e, o)
            if tail0[0] != "gen":
                continue
            if tail0 == head0:  # self-loop closes immediately
                key = canonical(((e, o),))
                if key not in seen:
                    seen.add(key)
                    out.append(Cycle((e,), (o,)))
                continue
            stack = [(((e, o),), head0, frozenset((tail0, head0)))]
            while stack:
                steps, head, visited = stack.pop()
                counter[0] += 1
                if counter[0] > max_cycles:
                    raise PathLimitExceeded(f"more than {max_cycles} cycle candidates")
                if head[0] != "gen":
                    continue
                for f, q in _leaving(d, head, steps[-1][0]):
                    _, nxt = _tail_head(d, f, q)
                    if nxt == tail0 and len(steps) >= 1:
                        key = canonical(steps + ((f, q),))
                        if key not in seen:
                            seen.add(key)
                            full = steps + ((f, q),)
                            out.append(
                                Cycle(tuple(s[0] for s in full), tuple(s[1] for s in full))
                            )
                    elif nxt not in visited:
                        stack.append((steps + ((f, q),), nxt, visited | {nxt}))
    return out


def cycle_basis(d: Diagram) -> list[Cycle]:
    """A fundamental cycle basis of the generator graph.

    Spans the cycle space: zero circulation on these implies zero on
    every simple cycle, so balance checks may use this instead of full
    enumeration.
    """
    parent: dict[tuple, tuple[tuple, str, Dir] | None] = {}
    basis: list[Cycle] = []
    internal = [
        e
        for e in d.edge_order
        if vertex_of(d.top_of(e))[0] == "gen" and vertex_of(d.bottom_of(e))[0] == "gen"
    ]
    in_tree: set[str] = set()
    for e in internal:
        u = vertex_of(d.top_of(e))
        v = vertex_of(d.bottom_of(e))
        parent.setdefault(u, None)
        parent.setdefault(v, None)

    def root(v: tuple) -> tuple:
        while parent[v] is not None:
            v = parent[v][0]
        return v

    def tree_path(v: tuple) -> list[tuple[tuple, str, Dir]]:
        """Steps from v up to its root: (parent_vertex, edge, dir_toward_parent)."""
        steps = []
        while parent[v] is not None:
            steps.append(parent[v])
            v = parent[v][0]
        return steps

    for e in internal:
        u = vertex_of(d.top_of(e))
        v = vertex_of(d.bottom_of(e))
        if u == v:
            basis.append(Cycle((e,), (Dir.DOWN,)))
            continue
        ru, rv = root(u), root(v)
        if ru != rv:
            # hang rv's tree under u: re-root then attach
            chain = []
            node = v
            while node is not None:
                chain.append(node)
                node = parent[node][0] if parent[node] else None
            # re-root the v-tree at v
            prev_link = None
            for node in chain:
                link = parent[node]
                parent[node] = prev_link
                if link is not None:
                    prev_link = (node, link[1], link[2].flipped)
            parent[v] = (u, e, Dir.UP)  # from v, edge e travels UP to u
            in_tree.add(e)
        else:
            # fundamental cycle: e + tree path u..root + root..v reversed
            up_u = tree_path(u)
            up_v = tree_path(v)
            # strip common suffix (shared ancestry)
            while up_u and up_v and up_u[-1] == up_v[-1]:
                up_u.pop()
                up_v.pop()
            steps: list[tuple[str, Dir]] = [(e, Dir.DOWN)]  # u -> v
            for _, edge, toward in up_v:  # v -> lca
                steps.append((edge, toward))
            for _, edge, toward in reversed(up_u):  # lca -> u
                steps.append((edge, toward.flipped))
            basis.append(Cycle(tuple(s[0] for s in steps), tuple(s[1] for s in steps)))
    return basis


# -- components -----------------------------------------------------------


@dataclass(frozen=True)
class ComponentMap:
    """Where a component's boundary sits inside the parent diagram."""

    input_slots: tuple[int, ...]
    output_slots: tuple[int, ...]
    generator_indices: tuple[int, ...]


def connected_components(d: Diagram) -> list[tuple[Diagram, ComponentMap]]:
    """Split into connected pieces, labels preserved.

    Ordered by first appearance (input slots, then output slots, then
    generator index).
    """
    parent: dict[tuple, tuple] = {}

    def find(v: tuple) -> tuple:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    def union(a: tuple, b: tuple) -> None:
        parent[find(a)] = find(b)

    verts = list(d.incidence.keys())
    for v in verts:
        parent[v] = v
    for e in d.edge_order:
        union(vertex_of(d.top_of(e)), vertex_of(d.bottom_of(e)))

    scan: list[tuple] = [("in", k) for k in range(d.n_inputs)]
    scan += [("out", k) for k in range(d.n_outputs)]
    scan += [("gen", i) for i in range(len(d.generators))]
    roots: dict[tuple, int] = {}
    for v in scan:
        r = find(v)
        if r not in roots:
            roots[r] = len(roots)

    pieces = []
    for r, _ in sorted(roots.items(), key=lambda kv: kv[1]):
        gen_idx = tuple(
            i for i in range(len(d.generators)) if find(("gen", i)) == r
        )
        in_slots = tuple(k for k in range(d.n_inputs) if find(("in", k)) == r)
        out_slots = tuple(k for k in range(d.n_outputs) if find(("out", k)) == r)
        piece = Diagram(
            tuple(d.generators[i] for i in gen_idx),
            tuple(d.inputs[k] for k in in_slots),
            tuple(d.outputs[k] for k in out_slots),
        )
        pieces.append((piece, ComponentMap(in_slots, out_slots, gen_idx)))
    return pieces


# -- wire bending ---------------------------------------------------------


def bend_wire(d: Diagram, which: int, to: str) -> Diagram:
    """Bend boundary wire `which` around to the other side with a cap or cup.

    `to` names the destination: to="output" takes input slot `which`
    and turns it into an output (via a cap), to="input" takes output
    slot `which` and turns it into an input (via a cup).  The bent wire
    lands at slot 0 of its new side.
    """
    if to not in ("input", "output"):
        raise DiagramError(f"to must be 'input' or 'output', got {to!r}")
    side = d.inputs if to == "output" else d.outputs
    if not 0 <= which < len(side):
        raise DiagramError(
            f"no boundary slot {which} to bend; the side has {len(side)} wires"
        )
    e = side[which]
    new = next(_fresh_namer(set(d.edge_order)))
    if to == "output":
        cap = Generator(GenKind.CAP, (), (new, e))
        return Diagram(
            d.generators + (cap,),
            d.inputs[:which] + d.inputs[which + 1 :],
            (new,) + d.outputs,
        )
    cup = Generator(GenKind.CUP, (new, e), ())
    return Diagram(
        d.generators + (cup,),
        (new,) + d.inputs,
        d.outputs[:which] + d.outputs[which + 1 :],
    )


# -- conjugation and doubling ---------------------------------------------


def conjugate(d: Diagram) -> Diagram:
    """Entrywise complex conjugate: negate every spider angle."""
    gens = tuple(
        replace(g, angle=-g.angle) if g.kind is GenKind.Z else g
        for g in d.generators
    )
    return Diagram(gens, d.inputs, d.outputs)


def conj_edge_name(e: str) -> str:
    """Name of the conjugate-copy twin of edge e in a doubled diagram."""
    return "~" + e


def cpm_construct(d: Diagram) -> Diagram:
    """Double d: d beside its conjugate, grounds replaced by cups.

    Every edge e of d appears as e (plain copy) and ~e (conjugate copy);
    boundary wires interleave as (e, ~e) per original wire.  The result
    is always pure.
    """
    clash = {conj_edge_name(e) for e in d.edge_order} & set(d.edge_order)
    if clash:
        raise DiagramError(f"edge names collide with conjugate prefix: {sorted(clash)}")
    conj_map = {e: conj_edge_name(e) for e in d.edge_order}

    gens1 = []
    cups = []
    for g in d.generators:
        if g.kind is GenKind.GROUND:
            e = g.ins[0]
            cups.append(Generator(GenKind.CUP, (e, conj_map[e]), ()))
        else:
            gens1.append(g)
    gens2 = []
    for g in d.generators:
        if g.kind is GenKind.GROUND:
            continue
        angle = -g.angle if g.kind is GenKind.Z else None
        gens2.append(
            Generator(
                g.kind,
                tuple(conj_map[e] for e in g.ins),
                tuple(conj_map[e] for e in g.outs),
                angle,
            )
        )
    inputs = tuple(x for e in d.inputs for x in (e, conj_map[e]))
    outputs = tuple(x for e in d.outputs for x in (e, conj_map[e]))
    return Diagram(tuple(gens1 + gens2 + cups), inputs, outputs)


# -- joining components ---------------------------------------------------


def _grow_leg(gens: list[Generator], host: int, leg: str) -> None:
    g = gens[host]
    gens[host] = replace(g, outs=g.outs + (leg,))


def connect_components(d: Diagram) -> Diagram:
    """Join all components into one, preserving the interpretation.

    Each component donates a green node (inserting Z(1,1,0) on a wire if
    it has none); grown legs are terminated pairwise by a connected
    all-ones effect, which factors as (<0|+<1|) x (<0|+<1|) and so leaves
    every component's matrix untouched.
    """
    comps = connected_components(d)
    if len(comps) <= 1:
        return d

    gens = list(d.generators)
    outputs = list(d.outputs)
    taken = set(d.edge_order)
    fresh = _fresh_namer(taken)

    hosts: list[int] = []
    for piece, cmap in comps:
        z = next((i for i in cmap.generator_indices if d.generators[i].kind is GenKind.Z), None)
        if z is not None:
            hosts.append(z)
            continue
        if not piece.edge_order:
            raise DiagramError("component with no edges and no spider cannot host a join")
        # split the component's first edge with an angle-0 identity spider
        e = piece.edge_order[0]
        w = next(fresh)
        bottom = d.bottom_of(e)
        if bottom[0] == "gen":
            _, gi, _, port = bottom
            g = gens[gi]
            gens[gi] = replace(g, ins=g.ins[:port] + (w,) + g.ins[port + 1 :])
        else:
            outputs[bottom[1]] = w
        gens.append(Generator(GenKind.Z, (e,), (w,), Angle.zero()))
        hosts.append(len(gens) - 1)

    def gadget(leg_a: str, leg_b: str) -> None:
        w1, w2, w3, w4, w5, w6 = (next(fresh) for _ in range(6))
        gens.append(Generator(GenKind.H, (leg_a,), (w1,)))
        gens.append(Generator(GenKind.H, (leg_b,), (w2,)))
        gens.append(Generator(GenKind.Z, (), (w3,), Angle.zero()))
        gens.append(Generator(GenKind.H, (w3,), (w4,)))
        gens.append(Generator(GenKind.Z, (w1, w2, w4), (w5,), Angle.zero()))
        gens.append(Generator(GenKind.H, (w5,), (w6,)))
        gens.append(Generator(GenKind.Z, (w6,), (), Angle.zero()))

    anchor = hosts[0]
    for other in hosts[1:]:
        leg_a, leg_b = next(fresh), next(fresh)
        _grow_leg(gens, anchor, leg_a)
        _grow_leg(gens, other, leg_b)
        gadget(leg_a, leg_b)

    return Diagram(tuple(gens), d.inputs, tuple(outputs))
