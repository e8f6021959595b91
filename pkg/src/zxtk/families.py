"""Small named diagrams used by the test-suite, benchmarks and demos."""

from __future__ import annotations

from .diagram import Angle, Diagram, Generator, GenKind, canonical_relabel, compose


def spider_trap() -> Diagram:
    """Two spiders sharing a parallel pair of edges; equal to a plain wire.

    A token dropped on `a` fans out onto `b` and `c`; without collision
    priority the pair on `c` could chase each other around the doubled
    edge forever.  With collisions first the run stops in two steps
    with one token on `d`.
    """
    z1 = Generator(GenKind.Z, ins=("a",), outs=("b", "c"))
    z2 = Generator(GenKind.Z, ins=("b", "c"), outs=("d",))
    return Diagram((z1, z2), inputs=("a",), outputs=("d",))


def cnot_diagram() -> Diagram:
    """CNOT up to a global 1/sqrt(2): green control, conjugated green target.

    Wire names are chosen for readable traces: inputs a1 a2, outputs
    b1 b2, internal edges e1..e4 in evaluation order.
    """
    control = Generator(GenKind.Z, ins=("a1",), outs=("b1", "e1"))
    ha = Generator(GenKind.H, ins=("e1",), outs=("e2",))
    hb = Generator(GenKind.H, ins=("a2",), outs=("e3",))
    target = Generator(GenKind.Z, ins=("e2", "e3"), outs=("e4",))
    hc = Generator(GenKind.H, ins=("e4",), outs=("b2",))
    return Diagram(
        (control, ha, hb, target, hc),
        inputs=("a1", "a2"),
        outputs=("b1", "b2"),
    )


def feedback_loop() -> Diagram:
    """Two spiders joined into a directed cycle; equal to a plain wire.

    The loop e2;e3 runs head-to-tail, so a lone token on it has cycle
    polarity 1 and is rejected, while an opposite pair balances out.
    """
    z1 = Generator(GenKind.Z, ins=("a1", "e3"), outs=("e2",))
    z2 = Generator(GenKind.Z, ins=("e2",), outs=("e3", "b1"))
    return Diagram((z1, z2), inputs=("a1",), outputs=("b1",))


def polarity_chain() -> Diagram:
    """Four spiders in a line; the edges e0..e4 form one directed path."""
    gens = tuple(
        Generator(GenKind.Z, ins=(f"e{i}",), outs=(f"e{i + 1}",)) for i in range(4)
    )
    return Diagram(gens, inputs=("e0",), outputs=("e4",))


def spider_z_nn(n: int, angle: Angle | None = None) -> Diagram:
    """The n-to-n spider: a dense 2^n by 2^n matrix with two nonzero entries.

    The token machine reads it back as just two terms of 2n tokens
    each, which is the textbook sparse win over the dense evaluation.
    """
    if n < 1:
        raise ValueError("need at least one leg per side")
    g = Generator(
        GenKind.Z,
        ins=tuple(f"a{i + 1}" for i in range(n)),
        outs=tuple(f"b{i + 1}" for i in range(n)),
        angle=angle if angle is not None else Angle.zero(),
    )
    return Diagram((g,), inputs=g.ins, outputs=g.outs)


def cnot_chain(k: int) -> Diagram:
    """k CNOT blocks composed in sequence on two wires."""
    if k < 1:
        raise ValueError("need at least one block")
    d = cnot_diagram()
    for _ in range(k - 1):
        d = compose(d, cnot_diagram())
    return canonical_relabel(d)
