"""Braid words, closure statistics, marked diagrams, and Markov variants.

A braid word on ``b`` strands is a sequence of nonzero integers ``g`` with
``|g| < b``; positive ``g`` is the Artin generator at position ``|g|``
(the strand entering bottom-left passes over), negative its inverse.

The closure of a word is cut into pieces at marked points.  Every crossing
leg carries its own marked point, so the diagram decomposes into one
crossing piece per letter plus one arc piece per arc of the closure; a
component without crossings keeps a single marked point and yields an arc
piece whose two endpoint variables coincide.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UsageError


class BraidSyntaxError(UsageError):
    """Malformed braid word text or out-of-range letters."""


@dataclass(frozen=True)
class BraidWord:
    """A word in the braid group on ``strands`` strands."""

    strands: int
    letters: tuple[int, ...]

    def __post_init__(self):
        if self.strands < 1:
            raise BraidSyntaxError(f"strand count must be >= 1, got {self.strands}")
        for g in self.letters:
            if g == 0 or abs(g) >= self.strands:
                raise BraidSyntaxError(
                    f"letter {g} out of range for {self.strands} strands"
                )
        object.__setattr__(self, "letters", tuple(self.letters))

    @property
    def writhe(self) -> int:
        return sum(1 if g > 0 else -1 for g in self.letters)

    def permutation(self) -> tuple[int, ...]:
        """Bottom-to-top strand permutation: position p enters, perm[p] exits."""
        pos = list(range(self.strands))  # pos[p] = wire currently at position p
        for g in self.letters:
            q = abs(g) - 1
            pos[q], pos[q + 1] = pos[q + 1], pos[q]
        # wire w sits at top position p  <=>  pos[p] == w
        perm = [0] * self.strands
        for p, w in enumerate(pos):
            perm[w] = p
        return tuple(perm)

    def text(self) -> str:
        return f"{self.strands};" + ",".join(str(g) for g in self.letters)


@dataclass(frozen=True)
class ClosureStats:
    components: int
    writhe: int
    strands: int
    self_linking: int


def parse_braid_word(text: str) -> BraidWord:
    """Parse ``"b;g1,g2,..."`` into a braid word; the letter list may be empty."""
    if ";" not in text:
        raise BraidSyntaxError(f"expected 'b;g1,g2,...', got {text!r}")
    head, _, tail = text.partition(";")
    try:
        strands = int(head.strip())
    except ValueError:
        raise BraidSyntaxError(f"bad strand count {head!r}") from None
    tail = tail.strip()
    if not tail:
        letters: tuple[int, ...] = ()
    else:
        try:
            letters = tuple(int(part.strip()) for part in tail.split(","))
        except ValueError:
            raise BraidSyntaxError(f"bad letter list {tail!r}") from None
    return BraidWord(strands, letters)


def closure_stats(word: BraidWord) -> ClosureStats:
    """Component count, writhe, strand count, and self-linking of the closure."""
    perm = word.permutation()
    seen = [False] * word.strands
    components = 0
    for p in range(word.strands):
        if seen[p]:
            continue
        components += 1
        q = p
        while not seen[q]:
            seen[q] = True
            q = perm[q]
    w = word.writhe
    return ClosureStats(components, w, word.strands, w - word.strands)


def component_of_position(word: BraidWord) -> tuple[int, ...]:
    """Component index of the wire entering each bottom position.

    Components are numbered 0.. in order of their smallest bottom position.
    """
    perm = word.permutation()
    comp = [-1] * word.strands
    label = 0
    for p in range(word.strands):
        if comp[p] >= 0:
            continue
        q = p
        while comp[q] < 0:
            comp[q] = label
            q = perm[q]
        label += 1
    return tuple(comp)


@dataclass(frozen=True)
class ArcPiece:
    """A crossing-free strand segment from marked point in_var to out_var."""

    in_var: int
    out_var: int


@dataclass(frozen=True)
class CrossingPiece:
    """A crossing with marked legs.

    ``var_in_left``/``var_in_right`` enter from below, ``var_out_left``/
    ``var_out_right`` exit above.  For positive sign the strand from
    bottom-left passes over and exits top-right.
    """

    sign: int
    position: int
    var_in_left: int
    var_in_right: int
    var_out_left: int
    var_out_right: int

    @property
    def variables(self) -> tuple[int, int, int, int]:
        """(i, j, s, t) = (in-left, in-right, out-left, out-right)."""
        return (
            self.var_in_left,
            self.var_in_right,
            self.var_out_left,
            self.var_out_right,
        )


@dataclass(frozen=True)
class MarkedDiagram:
    word: BraidWord
    nvars: int
    pieces: tuple
    component_of_variable: tuple[int, ...]
    components: int

    @property
    def crossings(self) -> tuple[CrossingPiece, ...]:
        return tuple(p for p in self.pieces if isinstance(p, CrossingPiece))

    @property
    def arcs(self) -> tuple[ArcPiece, ...]:
        return tuple(p for p in self.pieces if isinstance(p, ArcPiece))

    def to_json(self) -> dict:
        pieces = []
        for p in self.pieces:
            if isinstance(p, CrossingPiece):
                pieces.append(
                    {
                        "type": "C+" if p.sign > 0 else "C-",
                        "position": p.position,
                        "in": [p.var_in_left, p.var_in_right],
                        "out": [p.var_out_left, p.var_out_right],
                    }
                )
            else:
                pieces.append({"type": "A", "in": p.in_var, "out": p.out_var})
        return {
            "braid": self.word.text(),
            "nvars": self.nvars,
            "pieces": pieces,
            "component_of_variable": list(self.component_of_variable),
        }


def build_marked_diagram(word: BraidWord) -> MarkedDiagram:
    """Cut the closure of ``word`` into crossing pieces and arc pieces.

    Marked points: four per crossing (one per leg) plus one per crossingless
    component.  Every arc of the closure then gives one arc piece joining the
    two legs it connects; wires that never cross close up into one-point
    circles (equal in/out variable).
    """
    b = word.strands
    comp_of_pos = component_of_position(word)

    nvars = 0
    pieces: list = []
    var_component: list[int] = []

    def new_var(component: int) -> int:
        nonlocal nvars
        var_component.append(component)
        nvars += 1
        return nvars - 1

    # wire[p] = component of the wire currently at position p
    wire = list(comp_of_pos)
    # top_mark[p]: mark at the current upper end of the wire at position p
    top_mark: list[int | None] = [None] * b
    # bottom_mark[p]: mark at the diagram bottom of position p (closure target)
    bottom_mark: list[int | None] = [None] * b

    for idx, g in enumerate(word.letters):
        q = abs(g) - 1
        comp_l, comp_r = wire[q], wire[q + 1]
        x_i = new_var(comp_l)
        x_j = new_var(comp_r)
        # both strands cross: left wire exits top-right, right wire top-left
        x_s = new_var(comp_r)
        x_t = new_var(comp_l)
        for p, leg in ((q, x_i), (q + 1, x_j)):
            if top_mark[p] is None:
                bottom_mark[p] = leg
            else:
                pieces.append(ArcPiece(in_var=top_mark[p], out_var=leg))
        sign = 1 if g > 0 else -1
        pieces.append(CrossingPiece(sign, abs(g), x_i, x_j, x_s, x_t))
        top_mark[q], top_mark[q + 1] = x_s, x_t
        wire[q], wire[q + 1] = comp_r, comp_l

    for p in range(b):
        if top_mark[p] is None:
            x = new_var(comp_of_pos[p])
            pieces.append(ArcPiece(in_var=x, out_var=x))
        else:
            pieces.append(ArcPiece(in_var=top_mark[p], out_var=bottom_mark[p]))

    return MarkedDiagram(
        word=word,
        nvars=nvars,
        pieces=tuple(pieces),
        component_of_variable=tuple(var_component),
        components=closure_stats(word).components,
    )


def free_reduce(letters: tuple[int, ...]) -> tuple[int, ...]:
    """Cancel adjacent inverse pairs until stable."""
    out: list[int] = []
    for g in letters:
        if out and out[-1] == -g:
            out.pop()
        else:
            out.append(g)
    return tuple(out)


def markov_variants(word: BraidWord) -> list[BraidWord]:
    """Single-letter conjugates plus one positive and one negative stabilization.

    Conjugates are freely reduced; they keep the strand count, the
    stabilizations add one strand and one letter at the new top position.
    """
    variants: list[BraidWord] = []
    for g in range(1, word.strands):
        for eps in (1, -1):
            letters = free_reduce((eps * g,) + word.letters + (-eps * g,))
            variants.append(BraidWord(word.strands, letters))
    variants.append(BraidWord(word.strands + 1, word.letters + (word.strands,)))
    variants.append(BraidWord(word.strands + 1, word.letters + (-word.strands,)))
    return variants
