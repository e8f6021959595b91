"""The asynchronous token machine.

Token states are complex-weighted multisets of tokens (polynomials:
terms are token products, the state is their weighted sum).  Evolution
interleaves two rule families: a diffusion rewrites one chosen token at
the generator it points into, inside its term only; afterwards every
edge holding an opposite-direction token pair collides, erasing the
pair on equal bits and killing the term on unequal bits.  A step is one
diffusion followed by all collisions, so collisions always have
priority; a state where every token points at a boundary slot is a
normal form.

The same engine drives both machines: pure tokens carry one bit,
mixed-process tokens two (see `ground`).  The rule table is a
parameter.  Seeds are allowed to start with collision pairs on an edge
(that is how whole-matrix extraction is seeded); collisions only fire
after the first diffusion, which consumes half of the pair.
"""

from __future__ import annotations

import cmath
import math
import os
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .diagram import (
    DEFAULT_PATH_LIMIT,
    Cycle,
    Diagram,
    Dir,
    GenKind,
    Path,
    cycle_basis,
    enumerate_cycles,
    enumerate_paths,
    vertex_of,
)
from .errors import (
    DiagramError,
    FuseExceeded,
    GroundNotAllowed,
    NormalFormReached,
    NotCycleBalanced,
    NotWellFormed,
    PathLimitExceeded,
)

PRUNE_EPS = 1e-12
_INV_SQRT2 = 2.0**-0.5


class Token(NamedTuple):
    """One token: an edge, a travel direction, and its bit payload.

    Pure tokens carry one bit, ground tokens two.  Field order doubles
    as the canonical sort order of tokens inside a term.
    """

    edge: str
    direction: Dir
    bits: tuple[int, ...]

    def __str__(self) -> str:
        return f"({self.edge}{self.direction.arrow}{','.join(map(str, self.bits))})"


# A term is the canonically sorted token multiset; the scalar term is ().
Term = tuple[Token, ...]


def term_key(tokens: Iterable[Token]) -> Term:
    return tuple(sorted(tokens))


class TokenState:
    """A polynomial over tokens: like terms merged, zero terms pruned.

    The empty term () is the scalar monomial 1; a state with no terms
    at all is the zero polynomial.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Term, complex] | Iterable[tuple[complex, Iterable[Token]]] = ()):
        acc: dict[Term, complex] = {}
        pairs = terms.items() if isinstance(terms, Mapping) else ((term_key(toks), complex(c)) for c, toks in terms)
        for key, coeff in pairs:
            acc[key] = acc.get(key, 0j) + complex(coeff)
        self.terms = {k: v for k, v in acc.items() if abs(v) > PRUNE_EPS}

    @classmethod
    def single(cls, coeff: complex, tokens: Iterable[Token]) -> "TokenState":
        return cls([(coeff, tuple(tokens))])

    @classmethod
    def zero(cls) -> "TokenState":
        return cls()

    @classmethod
    def coerce(cls, value) -> "TokenState":
        if isinstance(value, cls):
            return value
        return cls(value)

    def canonical(self) -> tuple[tuple[Term, complex], ...]:
        """Terms in sorted order; the stable form used for comparison."""
        return tuple((k, self.terms[k]) for k in sorted(self.terms))

    def allclose(self, other: "TokenState", atol: float = 1e-9) -> bool:
        keys = set(self.terms) | set(other.terms)
        return all(
            abs(self.terms.get(k, 0j) - other.terms.get(k, 0j)) <= atol for k in keys
        )

    def __add__(self, other: "TokenState") -> "TokenState":
        acc = dict(self.terms)
        for k, v in other.terms.items():
            acc[k] = acc.get(k, 0j) + v
        return TokenState(acc)

    def scaled(self, factor: complex) -> "TokenState":
        return TokenState({k: v * factor for k, v in self.terms.items()})

    def copy(self) -> "TokenState":
        s = TokenState.__new__(TokenState)
        s.terms = dict(self.terms)
        return s

    def tokens(self) -> set[Token]:
        return {t for term in self.terms for t in term}

    def is_collision_free(self) -> bool:
        """No term has an edge carrying tokens in both directions."""
        for term in self.terms:
            dirs: dict[str, set[Dir]] = {}
            for t in term:
                dirs.setdefault(t.edge, set()).add(t.direction)
                if len(dirs[t.edge]) == 2:
                    return False
        return True

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, TokenState) and self.terms == other.terms

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        chunks = []
        for key, coeff in self.canonical():
            toks = "".join(map(str, key)) if key else "1"
            chunks.append(f"({coeff:.6g}){toks}")
        return " + ".join(chunks)

    __repr__ = __str__


# -- rule tables ------------------------------------------------------------

Branch = tuple[complex, tuple[Token, ...]]


class RuleTable:
    """Diffusion rules of one machine flavour.

    `diffuse` returns the branches replacing a token that entered
    generator `g` at the given side/port: a list of (factor, emitted
    tokens).  An empty list means the term is erased (factor 0).
    """

    name = "pure"
    bit_width = 1
    branch_factor = 2  # branches out of an H visit; sizes the step fuse

    @staticmethod
    def _spider_emissions(g, port_side: str, port: int, bits: tuple[int, ...]) -> tuple[Token, ...]:
        # every other leg of the spider fires away from it: inputs up, outputs down
        out = []
        for p, e in enumerate(g.ins):
            if not (port_side == "in" and p == port):
                out.append(Token(e, Dir.UP, bits))
        for p, e in enumerate(g.outs):
            if not (port_side == "out" and p == port):
                out.append(Token(e, Dir.DOWN, bits))
        return tuple(out)

    def diffuse(self, g, gen_kind: GenKind, port_side: str, port: int, token: Token) -> list[Branch]:
        (x,) = token.bits
        if gen_kind is GenKind.Z:
            phase = cmath.exp(1j * g.angle.to_radians * x)
            return [(phase, self._spider_emissions(g, port_side, port, (x,)))]
        if gen_kind is GenKind.H:
            other = g.outs[0] if port_side == "in" else g.ins[0]
            direction = Dir.DOWN if port_side == "in" else Dir.UP
            return [
                (((-1.0) ** (x * z)) * _INV_SQRT2, (Token(other, direction, (z,)),))
                for z in (0, 1)
            ]
        if gen_kind is GenKind.CUP:
            other = g.ins[1 - port]
            return [(1.0 + 0j, (Token(other, Dir.UP, (x,)),))]
        if gen_kind is GenKind.CAP:
            other = g.outs[1 - port]
            return [(1.0 + 0j, (Token(other, Dir.DOWN, (x,)),))]
        raise GroundNotAllowed(
            "pure tokens cannot enter a ground; run the two-bit machine or double the diagram"
        )


class GroundRuleTable(RuleTable):
    """Two-bit rules: the payload tracks both sides of the doubled diagram."""

    name = "ground"
    bit_width = 2
    branch_factor = 4

    def diffuse(self, g, gen_kind: GenKind, port_side: str, port: int, token: Token) -> list[Branch]:
        x, y = token.bits
        if gen_kind is GenKind.Z:
            phase = cmath.exp(1j * g.angle.to_radians * (x - y))
            return [(phase, self._spider_emissions(g, port_side, port, (x, y)))]
        if gen_kind is GenKind.H:
            other = g.outs[0] if port_side == "in" else g.ins[0]
            direction = Dir.DOWN if port_side == "in" else Dir.UP
            return [
                (
                    0.5 * ((-1.0) ** (x * z + y * zz)),
                    (Token(other, direction, (z, zz)),),
                )
                for z in (0, 1)
                for zz in (0, 1)
            ]
        if gen_kind is GenKind.CUP:
            other = g.ins[1 - port]
            return [(1.0 + 0j, (Token(other, Dir.UP, (x, y)),))]
        if gen_kind is GenKind.CAP:
            other = g.outs[1 - port]
            return [(1.0 + 0j, (Token(other, Dir.DOWN, (x, y)),))]
        # trace-out: the token is erased; unequal bits erase the whole term
        if x == y:
            return [(1.0 + 0j, ())]
        return []


PURE_RULES = RuleTable()
GROUND_RULES = GroundRuleTable()


# -- single rewrites --------------------------------------------------------


def _target_endpoint(d: Diagram, token: Token):
    """The attachment the token is heading for."""
    if token.direction is Dir.DOWN:
        return d.bottom_of(token.edge)
    return d.top_of(token.edge)


def is_frozen(d: Diagram, token: Token) -> bool:
    """True when the token points at a boundary slot: no rule applies."""
    return _target_endpoint(d, token)[0] != "gen"


def _remove_one(term: Term, token: Token) -> tuple[Token, ...]:
    i = term.index(token)
    return term[:i] + term[i + 1 :]


def _apply_rule(d: Diagram, token: Token, rules: RuleTable) -> tuple[int, str, list[Branch]]:
    """Run the diffusion rule for `token`; returns (gen index, rule name, branches)."""
    if len(token.bits) != rules.bit_width:
        raise DiagramError(
            f"token {token} carries {len(token.bits)} bits; these rules want {rules.bit_width}"
        )
    endpoint = _target_endpoint(d, token)
    if endpoint[0] != "gen":
        raise DiagramError(f"token {token} points at boundary slot {endpoint}; nothing to diffuse")
    _, gi, port_side, port = endpoint
    g = d.generators[gi]
    names = {
        GenKind.Z: "green-diffusion",
        GenKind.H: "hadamard-diffusion",
        GenKind.CUP: "cup-diffusion",
        GenKind.CAP: "cap-diffusion",
        GenKind.GROUND: "trace-out",
    }
    return gi, names[g.kind], rules.diffuse(g, g.kind, port_side, port, token)


def diffuse_once(
    d: Diagram,
    s: TokenState,
    site: tuple[Term, Token],
    *,
    rules: RuleTable = PURE_RULES,
) -> TokenState:
    """Apply one diffusion at (term, token), inside that term only.

    No collisions are performed; see `step` for the full machine move.
    """
    term, token = site
    term = term_key(term)
    coeff = s.terms.get(term)
    if coeff is None:
        raise DiagramError("site term is not present in the state")
    if token not in term:
        raise DiagramError(f"token {token} is not in the chosen term")
    _, _, branches = _apply_rule(d, token, rules)
    rest = _remove_one(term, token)
    out = {k: v for k, v in s.terms.items() if k != term}
    pairs = [(v, k) for k, v in out.items()]
    for factor, emitted in branches:
        pairs.append((coeff * factor, rest + emitted))
    return TokenState(pairs)


# collision record: (edge, down token, up token, bits matched?)
Collision = tuple[str, Token, Token, bool]


def _collide_term(term: Term) -> tuple[complex, Term, tuple[Collision, ...]]:
    """Resolve all collisions inside one term.

    On every edge holding both directions, the sorted down-tokens pair
    with the sorted up-tokens in order.  Returns the coefficient factor
    (0 or 1), the surviving term, and the pair records.
    """
    by_edge: dict[str, tuple[list[Token], list[Token]]] = {}
    for t in term:
        slot = by_edge.setdefault(t.edge, ([], []))
        slot[0 if t.direction is Dir.DOWN else 1].append(t)
    records: list[Collision] = []
    dead = False
    removed: list[Token] = []
    for edge in sorted(by_edge):
        downs, ups = by_edge[edge]
        for down, up in zip(sorted(downs), sorted(ups)):
            matched = down.bits == up.bits
            records.append((edge, down, up, matched))
            removed.extend((down, up))
            if not matched:
                dead = True
    if not records:
        return 1.0 + 0j, term, ()
    if dead:
        return 0j, (), tuple(records)
    survivors = list(term)
    for t in removed:
        survivors.remove(t)
    return 1.0 + 0j, term_key(survivors), tuple(records)


def collide_all(s: TokenState) -> TokenState:
    """Apply every possible collision; the result is collision-free."""
    state, _ = _collide_all_recorded(s)
    return state


def _collide_all_recorded(s: TokenState) -> tuple[TokenState, tuple[Collision, ...]]:
    pairs = []
    records: list[Collision] = []
    for term, coeff in s.terms.items():
        factor, survivor, recs = _collide_term(term)
        records.extend(recs)
        if factor != 0:
            pairs.append((coeff * factor, survivor))
    return TokenState(pairs), tuple(records)


# -- schedulers -------------------------------------------------------------

Site = tuple[Term, Token]
Strategy = Callable[[Diagram, TokenState, Sequence[Site]], Site]


def _active_sites(d: Diagram, s: TokenState) -> list[Site]:
    """Diffusible (term, token) sites in canonical order."""
    sites: list[Site] = []
    for term in sorted(s.terms):
        seen: set[Token] = set()
        for token in term:
            if token in seen:
                continue  # duplicate tokens in a multiset share one site
            seen.add(token)
            if not is_frozen(d, token):
                sites.append((term, token))
    return sites


def _depth_map(d: Diagram) -> dict[int, int]:
    """Rough top-to-bottom rank of each generator, input boundary = 0."""
    depth = {i: 0 for i in range(len(d.generators))}
    feeds: list[tuple[int, int]] = []  # (upper gen, lower gen)
    roots: set[int] = set()
    for e in d.edge_order:
        top, bottom = vertex_of(d.top_of(e)), vertex_of(d.bottom_of(e))
        if bottom[0] == "gen":
            if top[0] == "gen":
                feeds.append((top[1], bottom[1]))
            else:
                roots.add(bottom[1])
    for _ in range(len(d.generators)):
        changed = False
        for up, down in feeds:
            want = depth[up] + 1
            if depth[down] < want and down not in roots:
                depth[down] = min(want, len(d.generators))
                changed = True
        if not changed:
            break
    return depth


def make_strategy(spec: "str | Strategy") -> Strategy:
    """Build a scheduler from its name.

    deterministic        lexicographically least active site (default)
    random[:seed]        uniform choice, reproducible per run
    sparse-first         smallest term first, ties lexicographic
    slice-order          sweep generators top to bottom, mimicking
                         slice-by-slice evaluation of the matrix
    """
    if callable(spec):
        return spec
    if spec == "deterministic":
        return lambda d, s, sites: sites[0]
    if spec == "random" or spec.startswith("random:"):
        seed = int(spec.split(":", 1)[1]) if ":" in spec else 0
        rng = random.Random(seed)
        return lambda d, s, sites: sites[rng.randrange(len(sites))]
    if spec == "sparse-first":
        return lambda d, s, sites: min(sites, key=lambda site: (len(site[0]),) + site)
    if spec == "slice-order":
        def pick(d: Diagram, s: TokenState, sites: Sequence[Site]) -> Site:
            depth = _depth_map(d)

            def rank(site: Site):
                endpoint = _target_endpoint(d, site[1])
                return (depth[endpoint[1]],) + site

            return min(sites, key=rank)

        return pick
    raise DiagramError(f"unknown scheduler {spec!r}")


def scripted_strategy(tokens: Sequence[Token]) -> Strategy:
    """Replay a fixed token order; each call consumes the next entry.

    When several terms hold the listed token, the canonically first
    term is chosen.
    """
    queue = list(tokens)

    def pick(d: Diagram, s: TokenState, sites: Sequence[Site]) -> Site:
        if not queue:
            raise DiagramError("scripted scheduler ran out of entries")
        want = queue.pop(0)
        for site in sites:
            if site[1] == want:
                return site
        raise DiagramError(f"scripted token {want} is not an active site")

    return pick


# -- the machine ------------------------------------------------------------


@dataclass(frozen=True)
class TraceStep:
    """One machine move: a diffusion plus the collisions it triggered."""

    index: int
    rule: str
    gen_index: int
    term: Term
    token: Token
    produced: tuple[Branch, ...]
    collisions: tuple[Collision, ...]
    state_after: TokenState

    @property
    def rule_applications(self) -> int:
        """Rewrite rules fired in this move: the diffusion plus each collision pair."""
        return 1 + len(self.collisions)


@dataclass
class Trace:
    initial: TokenState
    steps: list[TraceStep]

    @property
    def final(self) -> TokenState:
        return self.steps[-1].state_after if self.steps else self.initial

    def states(self) -> Iterable[TokenState]:
        yield self.initial
        for st in self.steps:
            yield st.state_after

    @property
    def rule_applications(self) -> int:
        return sum(st.rule_applications for st in self.steps)

    def __len__(self) -> int:
        return len(self.steps)


def _step_recorded(
    d: Diagram,
    s: TokenState,
    strategy: Strategy,
    rules: RuleTable,
    index: int,
) -> tuple[TokenState, TraceStep]:
    sites = _active_sites(d, s)
    if not sites:
        raise NormalFormReached("every token points at a boundary slot")
    term, token = strategy(d, s, sites)
    gi, rule_name, branches = _apply_rule(d, token, rules)
    diffused = diffuse_once(d, s, (term, token), rules=rules)
    after, collisions = _collide_all_recorded(diffused)
    record = TraceStep(
        index=index,
        rule=rule_name,
        gen_index=gi,
        term=term,
        token=token,
        produced=tuple(branches),
        collisions=collisions,
        state_after=after,
    )
    return after, record


def step(
    d: Diagram,
    s: TokenState,
    scheduler: "str | Strategy" = "deterministic",
    *,
    rules: RuleTable = PURE_RULES,
) -> TokenState:
    """One machine move: a scheduled diffusion, then all collisions."""
    out, _ = _step_recorded(d, TokenState.coerce(s), make_strategy(scheduler), rules, 0)
    return out


def _resolve_fuse(d: Diagram, s: TokenState, rules: RuleTable, fuse: int | None) -> int:
    if fuse is not None:
        return fuse
    env = os.environ.get("ZXTK_FUSE")
    if env:
        return int(env)
    n_h = sum(1 for g in d.generators if g.kind is GenKind.H)
    terms_bound = max(1, len(s.terms)) * rules.branch_factor ** min(n_h, 20)
    return 4 * max(1, len(d.generators)) * terms_bound


def normalize(
    d: Diagram,
    s: "TokenState | Iterable",
    scheduler: "str | Strategy" = "deterministic",
    *,
    rules: RuleTable = PURE_RULES,
    fuse: int | None = None,
    force: bool = False,
    path_budget: int = 50_000,
) -> tuple[TokenState, Trace]:
    """Drive the state to its normal form.

    The seed must be cycle-balanced (or the run would diverge) and
    well-formed; both are checked up front unless `force` is set.  The
    well-formedness check is certified cheaply where possible and falls
    back to exhaustive path enumeration capped at `path_budget`; past
    the cap the run proceeds guarded by the step fuse alone, as it does
    under `force`.
    """
    state = TokenState.coerce(s)
    if not force:
        balanced = is_cycle_balanced(d, state)
        if not balanced:
            raise NotCycleBalanced(
                "seed has nonzero polarity on a cycle; the run would not terminate",
                witness=balanced.witness,
            )
        formed = _well_formed_gated(d, state, path_budget)
        if formed is not None and not formed:
            raise NotWellFormed("seed breaks the one-token-per-path bound", witness=formed.witness)
    limit = _resolve_fuse(d, state, rules, fuse)
    strategy = make_strategy(scheduler)
    trace = Trace(initial=state, steps=[])
    for index in range(limit):
        try:
            state, record = _step_recorded(d, state, strategy, rules, index)
        except NormalFormReached:
            return state, trace
        trace.steps.append(record)
    raise FuseExceeded(f"no normal form within {limit} steps", state=state, steps=limit)


# -- polarity and structural invariants --------------------------------------


def polarity(d: Diagram, p: Path, t: "Term | Token | TokenState") -> int:
    """Signed token count along p: +1 with the traversal, -1 against."""
    if isinstance(t, TokenState):
        raise DiagramError("polarity is defined per term; pass one term of the state")
    tokens = (t,) if isinstance(t, Token) else t
    total = 0
    for token in tokens:
        orient = p.orientation_of(token.edge)
        if orient is not None:
            total += 1 if orient == token.direction else -1
    return total


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    witness: "tuple[Path, Term, int] | None" = None

    def __bool__(self) -> bool:
        return self.ok


_PATH_CACHE: dict[tuple, tuple[tuple[Path, ...], np.ndarray]] = {}
_CYCLE_CACHE: dict[tuple, tuple[tuple[Cycle, ...], np.ndarray]] = {}


def _orientation_matrix(d: Diagram, paths: Sequence[Path]) -> np.ndarray:
    index = {e: i for i, e in enumerate(d.edge_order)}
    m = np.zeros((len(paths), len(d.edge_order)), dtype=np.int8)
    for r, p in enumerate(paths):
        for e, o in zip(p.edges, p.dirs):
            m[r, index[e]] = 1 if o is Dir.DOWN else -1
    return m


def _paths_cached(d: Diagram, cap: int) -> tuple[tuple[Path, ...], np.ndarray]:
    key = (d, cap)
    hit = _PATH_CACHE.get(key)
    if hit is None:
        paths = tuple(enumerate_paths(d, cap))
        hit = (paths, _orientation_matrix(d, paths))
        _PATH_CACHE[key] = hit
    return hit


def _cycles_cached(d: Diagram, mode: str) -> tuple[tuple[Cycle, ...], np.ndarray]:
    key = (d, mode)
    hit = _CYCLE_CACHE.get(key)
    if hit is None:
        cycles = tuple(cycle_basis(d) if mode == "basis" else enumerate_cycles(d))
        hit = (cycles, _orientation_matrix(d, cycles))
        _CYCLE_CACHE[key] = hit
    return hit


def _flow_vector(d: Diagram, term: Term) -> np.ndarray:
    index = {e: i for i, e in enumerate(d.edge_order)}
    f = np.zeros(len(d.edge_order), dtype=np.int64)
    for t in term:
        f[index[t.edge]] += 1 if t.direction is Dir.DOWN else -1
    return f


def _wf_fast(d: Diagram, term: Term) -> bool | None:
    """Cheap sufficient conditions for well-formedness, None if undecided.

    Either the term has less than two units of net flow in total, or
    every token sits on its own boundary edge pointing into the
    diagram; a path can touch at most two boundary edges (one per free
    end) and meets inward tokens with opposite signs.
    """
    f = _flow_vector(d, term)
    if np.abs(f).sum() < 2:
        return True
    edges = [t.edge for t in term]
    if len(set(edges)) != len(edges):
        return None
    for t in term:
        top, bottom = vertex_of(d.top_of(t.edge)), vertex_of(d.bottom_of(t.edge))
        inward = (top[0] == "in" and t.direction is Dir.DOWN) or (
            bottom[0] == "out" and t.direction is Dir.UP
        )
        if not inward:
            return None
    return True


def is_well_formed(d: Diagram, s: "TokenState | Term", *, max_paths: int = DEFAULT_PATH_LIMIT) -> CheckResult:
    """Every term must keep |polarity| <= 1 on every path."""
    state = s if isinstance(s, TokenState) else TokenState.single(1.0, s)
    paths, m = _paths_cached(d, max_paths)
    for term in state.terms:
        if _wf_fast(d, term) is True:
            continue
        if not len(paths):
            continue
        p_values = m @ _flow_vector(d, term)
        bad = np.flatnonzero(np.abs(p_values) > 1)
        if bad.size:
            i = int(bad[0])
            return CheckResult(False, (paths[i], term, int(p_values[i])))
    return CheckResult(True)


def _well_formed_gated(d: Diagram, s: TokenState, path_budget: int) -> CheckResult | None:
    if all(_wf_fast(d, term) is True for term in s.terms):
        return CheckResult(True)
    try:
        return is_well_formed(d, s, max_paths=path_budget)
    except PathLimitExceeded:
        return None


def is_cycle_balanced(
    d: Diagram, s: "TokenState | Term", *, mode: str = "basis", max_cycles: int = DEFAULT_PATH_LIMIT
) -> CheckResult:
    """Every term must have zero polarity on every cycle.

    The default checks a fundamental cycle basis; polarity is linear in
    the cycle's edge incidences, so zero on the basis is zero
    everywhere.  mode="exhaustive" enumerates all cycles instead.
    """
    if mode not in ("basis", "exhaustive"):
        raise DiagramError(f"unknown cycle check mode {mode!r}")
    state = s if isinstance(s, TokenState) else TokenState.single(1.0, s)
    cycles, m = _cycles_cached(d, mode)
    if not len(cycles):
        return CheckResult(True)
    for term in state.terms:
        p_values = m @ _flow_vector(d, term)
        bad = np.flatnonzero(p_values != 0)
        if bad.size:
            i = int(bad[0])
            return CheckResult(False, (cycles[i], term, int(p_values[i])))
    return CheckResult(True)


# -- rewinding diagnostic ----------------------------------------------------


def rewind_witness(d: Diagram, initial: Term, trace: Trace, target: Token) -> Path:
    """A path explaining where `target` came from.

    Follows the recorded genealogy from the final state back to the
    initial term, then returns a path that ends at the target's edge,
    oriented with it, and has polarity 1 against the initial term.
    Purely diagnostic; requires the target to survive in the final
    state.
    """
    initial = term_key(initial)
    if not any(target in term for term in trace.final.terms):
        raise DiagramError(f"token {target} is not in the trace's final state")

    walk = [target]
    current = target
    for record in reversed(trace.steps):
        emitted = {t for _, toks in record.produced for t in toks}
        if current in emitted:
            walk.append(record.token)
            current = record.token
    walk.reverse()

    def as_path(tokens: list[Token]) -> Path | None:
        seen: dict[tuple, int] = {}
        edges: list[str] = []
        dirs: list[Dir] = []
        for t in tokens:
            v = vertex_of(d.top_of(t.edge) if t.direction is Dir.DOWN else d.bottom_of(t.edge))
            if v in seen:  # shortcut the loop back to the earlier visit
                del edges[seen[v]:], dirs[seen[v]:]
                for key in [k for k, i in seen.items() if i > seen[v]]:
                    del seen[key]
            else:
                seen[v] = len(edges)
            edges.append(t.edge)
            dirs.append(t.direction)
        try:
            p = Path(tuple(edges), tuple(dirs))
            from .diagram import validate_path

            validate_path(d, p)
            return p
        except DiagramError:
            return None

    candidate = as_path(walk)
    if candidate is not None and polarity(d, candidate, initial) == 1:
        return candidate
    # genealogy got tangled (merged terms); fall back to a direct search
    for p in sorted(enumerate_paths(d), key=len):
        for q in (p, p.reversed()):
            if q.edges[-1] == target.edge and q.dirs[-1] == target.direction:
                if polarity(d, q, initial) == 1:
                    return q
    raise DiagramError(f"no rewind path found for {target}")


# -- semantics extraction ----------------------------------------------------


def _bits_to_index(bits_list: Sequence[tuple[int, ...]]) -> int:
    idx = 0
    for bits in bits_list:
        for b in bits:
            idx = idx * 2 + b
    return idx


def read_terms(
    d: Diagram,
    s: TokenState,
    row_edges: Sequence[str],
    col_edges: Sequence[str],
    *,
    bit_width: int = 1,
) -> np.ndarray:
    """Read a normal form as a matrix.

    Row bits come from down tokens on `row_edges`, column bits from up
    tokens on `col_edges`, big-endian in list order.  Every listed edge
    must carry exactly one token of the expected direction in every
    term.
    """
    rows = 2 ** (len(row_edges) * bit_width)
    cols = 2 ** (len(col_edges) * bit_width)
    m = np.zeros((rows, cols), dtype=complex)
    for term, coeff in s.terms.items():
        lookup: dict[tuple[str, Dir], list[tuple[int, ...]]] = {}
        for t in term:
            lookup.setdefault((t.edge, t.direction), []).append(t.bits)
        try:
            row_bits = [lookup[(e, Dir.DOWN)][0] for e in row_edges]
            col_bits = [lookup[(e, Dir.UP)][0] for e in col_edges]
        except KeyError as missing:
            raise DiagramError(
                f"normal form term {term} has no token for boundary edge {missing}"
            ) from None
        m[_bits_to_index(row_bits), _bits_to_index(col_bits)] += coeff
    return m


def run_single_token(
    d: Diagram, k: int, x: int, scheduler: "str | Strategy" = "deterministic", **kw
) -> TokenState:
    """Normal form of one token dropped down input wire k with bit x."""
    if not 0 <= k < d.n_inputs:
        raise DiagramError(f"no input slot {k}")
    seed = TokenState.single(1.0, [Token(d.inputs[k], Dir.DOWN, (x,))])
    state, _ = normalize(d, seed, scheduler, **kw)
    return state


def run_multi_token(
    d: Diagram,
    input_state: "Mapping | Sequence[complex] | np.ndarray",
    scheduler: "str | Strategy" = "deterministic",
    **kw,
) -> TokenState:
    """Normal form of a weighted superposition of full input rows.

    The input is either a mapping from bitstrings (like "10" or bit
    tuples) to amplitudes, or a dense length-2^n vector.
    """
    n = d.n_inputs
    weights: list[tuple[complex, tuple[int, ...]]] = []
    if isinstance(input_state, Mapping):
        for key, amp in input_state.items():
            bits = tuple(int(b) for b in key)
            if len(bits) != n or any(b not in (0, 1) for b in bits):
                raise DiagramError(f"bad input bitstring {key!r} for {n} wires")
            weights.append((complex(amp), bits))
    else:
        vec = np.asarray(input_state, dtype=complex).reshape(-1)
        if vec.shape[0] != 2**n:
            raise DiagramError(f"input vector length {vec.shape[0]}, expected {2 ** n}")
        weights = [
            (vec[i], tuple((i >> (n - 1 - j)) & 1 for j in range(n)))
            for i in range(2**n)
            if abs(vec[i]) > PRUNE_EPS
        ]
    seed = TokenState(
        (amp, [Token(e, Dir.DOWN, (b,)) for e, b in zip(d.inputs, bits)])
        for amp, bits in weights
    )
    state, _ = normalize(d, seed, scheduler, **kw)
    return state


def extract_state(
    d: Diagram,
    seed_edge: str | None = None,
    scheduler: "str | Strategy" = "deterministic",
    *,
    rules: RuleTable = PURE_RULES,
    **kw,
) -> TokenState:
    """Summed normal forms of every bit pattern seeded on one edge.

    Each pattern starts as an opposite-direction token pair on the
    seed edge and is normalized in its own run: one pattern's pair must
    not be collided away by a diffusion happening in another pattern's
    term.  The sum holds one term per nonzero matrix entry.
    """
    from .diagram import connected_components

    if len(connected_components(d)) > 1:
        raise DiagramError("diagram is disconnected; use extract_matrix_general")
    if not d.edge_order:
        raise DiagramError("diagram has no edge to seed")
    edge = seed_edge if seed_edge is not None else d.edge_order[0]
    if edge not in d.edges:
        raise DiagramError(f"unknown seed edge {edge!r}")
    w = rules.bit_width
    total = TokenState.zero()
    for pattern in range(2**w):
        bits = tuple((pattern >> (w - 1 - j)) & 1 for j in range(w))
        seed = TokenState.single(
            1.0, [Token(edge, Dir.DOWN, bits), Token(edge, Dir.UP, bits)]
        )
        state, _ = normalize(d, seed, scheduler, rules=rules, **kw)
        total = total + state
    return total


def extract_matrix(
    d: Diagram,
    seed_edge: str | None = None,
    scheduler: "str | Strategy" = "deterministic",
    *,
    rules: RuleTable = PURE_RULES,
    **kw,
) -> np.ndarray:
    """Whole matrix of a connected diagram from one seeded edge.

    Down tokens on outputs index rows, up tokens on inputs index
    columns, big-endian in slot order.
    """
    total = extract_state(d, seed_edge, scheduler, rules=rules, **kw)
    return read_terms(d, total, d.outputs, d.inputs, bit_width=rules.bit_width)


def extract_matrix_general(
    d: Diagram, scheduler: "str | Strategy" = "deterministic", **kw
) -> np.ndarray:
    """Matrix of any pure diagram, connected or not.

    Each component is extracted on its own (edgeless scalar components
    fall back to the dense interpretation) and the results recombine by
    tensor product, with wires permuted back to the host slot order.
    """
    from .diagram import connected_components
    from .interp import interp

    comps = connected_components(d)
    if not comps:
        return np.array([[1.0 + 0j]])
    blocks = []
    for piece, cmap in comps:
        if piece.edge_order:
            blocks.append((extract_matrix(piece, None, scheduler, **kw), cmap))
        else:
            blocks.append((interp(piece), cmap))
    m = np.array([[1.0 + 0j]])
    for block, _ in blocks:
        m = np.kron(m, block)
    out_order = [k for _, cmap in blocks for k in cmap.output_slots]
    in_order = [k for _, cmap in blocks for k in cmap.input_slots]
    return _permute_wires(m, out_order, in_order, d.n_outputs, d.n_inputs)


def _permute_wires(
    m: np.ndarray, out_order: Sequence[int], in_order: Sequence[int], n_out: int, n_in: int
) -> np.ndarray:
    """Reorder row/column qubits from the given current order to 0..n-1."""
    t = m.reshape((2,) * (n_out + n_in))
    perm = [out_order.index(k) for k in range(n_out)]
    perm += [n_out + in_order.index(k) for k in range(n_in)]
    return t.transpose(perm).reshape(2**n_out, 2**n_in)
