"""Independent polynomial oracles computed by skein recursion and state sums.

``homfly_series`` evaluates the transverse-invariant normalization of the
HOMFLYPT series directly on braid words:

    x a^-2 F(B+) - x^-1 a^2 F(B-) = (x^-1 - x) F(B0)
    F(B') = -a^-2 F(B)        for B' a negative stabilization of B
    F(U)  = (1 + a^-2 x^2) / (1 - x^2)

The recursion switches the first crossing that violates a descending
template (first visit passes over) and smooths it; descending closures are
transversely split unlinks and are evaluated from their component
self-linking numbers.  ``jones_kauffman`` is a Temperley-Lieb state sum for
the unreduced Jones polynomial normalized to q + 1/q on the unknot.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

from .analysis import LaurentSeries, unknot_series
from .braid import BraidWord, free_reduce
from .errors import ResourceLimitError, UsageError


@dataclass(frozen=True)
class SkeinNode:
    """One node of the skein recursion: a word and its multiplier series."""

    word: BraidWord
    multiplier: LaurentSeries


def _cyclic_reduce(strands: int, letters: tuple[int, ...]) -> tuple[int, ...]:
    letters = free_reduce(letters)
    while len(letters) >= 2 and letters[0] == -letters[-1]:
        letters = free_reduce(letters[1:-1])
    return letters


def _split_at_unused(strands: int, letters):
    """Split the closure at strand positions no letter touches.

    Returns a list of (strands, letters) whose closures are the split
    factors; untouched positions become one-strand factors.
    """
    used = set(abs(g) for g in letters)
    cuts = [p for p in range(1, strands) if p not in used]
    if not cuts:
        return [(strands, letters)]
    factors = []
    bounds = [0] + cuts + [strands]
    for lo, hi in zip(bounds, bounds[1:]):
        width = hi - lo
        part = tuple(
            (abs(g) - lo) * (1 if g > 0 else -1)
            for g in letters
            if lo < abs(g) < hi
        )
        factors.append((width, part))
    return factors


def _destabilize(strands: int, letters):
    """Remove a sole top-generator letter; returns (strands, letters, neg_count).

    Iterates: whenever the top generator occurs exactly once the strand can
    be destabilized, at the cost of one -a^-2 factor per negative sign.
    """
    negs = 0
    changed = True
    while changed:
        changed = False
        letters = _cyclic_reduce(strands, letters)
        if strands > 1:
            top = strands - 1
            occurrences = [k for k, g in enumerate(letters) if abs(g) == top]
            if len(occurrences) == 1:
                k = occurrences[0]
                if letters[k] < 0:
                    negs += 1
                letters = letters[:k] + letters[k + 1 :]
                strands -= 1
                changed = True
    return strands, letters, negs


def _crossing_passes(strands: int, letters):
    """Traversal data of the closure: per crossing, the visit order.

    Returns (targets, components, comp_strands, self_writhe) where
    ``targets[k]`` is the sign making crossing k descending (first visit
    passes over), ``components[k]`` the pair of component ids through it.
    """
    # positions of wires through the braid: walk each component
    k = len(letters)
    # entry_of[(position, time)] -> next crossing along the wire
    # crossing times are 0..k-1; wires at position p between times
    perm_walk: dict = {}
    # simulate: wire at position p at level t moves to level t+1
    # visits[k] = list of (order_stamp, side) with side 0 = enters at q, 1 = at q+1
    visit_sides: dict = {}
    comp_of_pass: dict = {}
    stamp = 0
    visited_starts = set()
    component = 0
    comp_strand_count: dict = {}
    comp_self_writhe: dict = {}
    comp_of_bottom: dict = {}
    for start in range(strands):
        if start in visited_starts:
            continue
        comp_strand_count[component] = 0
        pos = start
        while True:
            if pos in visited_starts:
                break
            visited_starts.add(pos)
            comp_of_bottom[pos] = component
            comp_strand_count[component] += 1
            # walk up through the letters (0-based crossing positions)
            for t, g in enumerate(letters):
                q = abs(g) - 1
                if pos == q:
                    visit_sides.setdefault(t, []).append((stamp, 0, component))
                    stamp += 1
                    pos = q + 1
                elif pos == q + 1:
                    visit_sides.setdefault(t, []).append((stamp, 1, component))
                    stamp += 1
                    pos = q
            # closure: top position pos wraps to bottom position pos
        component += 1
    # second walk is implicit: each crossing is visited exactly twice
    targets = {}
    components = {}
    for t, g in enumerate(letters):
        visits = sorted(visit_sides[t])
        if len(visits) != 2:
            raise UsageError("traversal failed to visit a crossing twice")
        (_, first_side, comp_a), (_, _, comp_b) = visits
        # positive letter: the strand entering at position q passes over
        targets[t] = 1 if first_side == 0 else -1
        components[t] = (comp_a, comp_b)
        if comp_a == comp_b:
            comp_self_writhe[comp_a] = comp_self_writhe.get(comp_a, 0) + (
                1 if g > 0 else -1
            )
    return targets, components, comp_strand_count, comp_self_writhe


def _descending_value(strands, letters, truncation) -> LaurentSeries:
    """Series of a descending closure: a transverse split unlink.

    Each component is a transverse unknot with self-linking w_i - b_i, and a
    transverse unknot with self-linking -1-2nu is nu negative stabilizations
    of the standard one.
    """
    _, _, comp_strands, comp_writhe = _crossing_passes(strands, letters)
    total_nu = 0
    m = len(comp_strands)
    for comp, b_i in comp_strands.items():
        sl = comp_writhe.get(comp, 0) - b_i
        if (sl + 1) % 2:
            raise UsageError("component self-linking has the wrong parity")
        nu = (-1 - sl) // 2
        if nu < 0:
            raise UsageError("descending component with positive stabilizations")
        total_nu += nu
    out = LaurentSeries.term(truncation, 0, 0)
    fu = unknot_series(truncation)
    for _ in range(m):
        out = out * fu
    if total_nu:
        sign = -1 if total_nu % 2 else 1
        out = out.scale(-2 * total_nu, 0, sign)
    return out


def homfly_series(
    word: BraidWord, x_truncation: int, budget: int = 200_000
) -> LaurentSeries:
    """Transverse HOMFLYPT series of the closure, truncated in x.

    Computed by crossing switches toward a descending template plus
    smoothings, with free/cyclic reduction, destabilization, and split
    handling between steps; memoized on reduced words.
    """
    if x_truncation < 0:
        raise UsageError("truncation must be nonnegative")
    # every skein step at a positive letter shifts the window down by two,
    # and a branch can take quadratically many steps, so compute with
    # headroom and cut back at the end
    k = len(word.letters)
    window = x_truncation + k * (k + 3) + 4
    memo: dict = {}
    steps = 0

    def evaluate(strands: int, letters: tuple[int, ...]) -> LaurentSeries:
        nonlocal steps
        steps += 1
        if steps > budget:
            raise ResourceLimitError("skein recursion budget exceeded")
        strands, letters, negs = _destabilize(strands, letters)
        factors = _split_at_unused(strands, letters)
        if len(factors) > 1:
            acc = LaurentSeries.term(window, 0, 0)
            for fb, fl in factors:
                acc = acc * evaluate(fb, fl)
            if negs:
                sign = -1 if negs % 2 else 1
                acc = acc.scale(-2 * negs, 0, sign)
            return acc
        key = (strands, letters)
        if key in memo:
            base = memo[key]
        else:
            base = _evaluate_core(strands, letters)
            memo[key] = base
        if negs:
            sign = -1 if negs % 2 else 1
            base = base.scale(-2 * negs, 0, sign)
        return base

    def _evaluate_core(strands, letters) -> LaurentSeries:
        if not letters:
            out = LaurentSeries.term(window, 0, 0)
            fu = unknot_series(window)
            for _ in range(strands):
                out = out * fu
            return out
        targets, _, _, _ = _crossing_passes(strands, letters)
        bad = [t for t, g in enumerate(letters) if (1 if g > 0 else -1) != targets[t]]
        if not bad:
            return _descending_value(strands, letters, window)
        t = bad[0]
        g = letters[t]
        switched = letters[:t] + (-g,) + letters[t + 1 :]
        smoothed = letters[:t] + letters[t + 1 :]
        f_switched = evaluate(strands, switched)
        f_smoothed = evaluate(strands, smoothed)
        if g > 0:
            # F(B+) = a^4 x^-2 F(B-) + a^2 (x^-2 - 1) F(B0)
            part1 = f_switched.scale(4, -2)
            part2 = f_smoothed.scale(2, -2) - f_smoothed.scale(2, 0)
        else:
            # F(B-) = a^-4 x^2 F(B+) + a^-2 (x^2 - 1) F(B0)
            part1 = f_switched.scale(-4, 2)
            part2 = f_smoothed.scale(-2, 2) - f_smoothed.scale(-2, 0)
        return part1 + part2

    full = evaluate(word.strands, word.letters)
    return LaurentSeries(x_truncation, full.coeffs)


# ---------------------------------------------------------------------------
# Kauffman state sum for the unreduced Jones polynomial
# ---------------------------------------------------------------------------


def _closure_loop_count(strands: int, letters, state) -> int:
    """Loops of a state's smoothing, by union-find over wire segments.

    The identity smoothing continues both wires; the cup-cap smoothing caps
    the two incoming wires together and starts two new wires joined to each
    other.  The closure finally joins each top wire to its bottom wire.
    """
    parent = list(range(strands))
    bottom = list(range(strands))
    wire = list(range(strands))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x: int, y: int) -> None:
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry

    def fresh() -> int:
        parent.append(len(parent))
        return len(parent) - 1

    for g, bit in zip(letters, state):
        q = abs(g) - 1
        use_e = (bit == 1) if g > 0 else (bit == 0)
        if use_e:
            union(wire[q], wire[q + 1])
            wire[q] = fresh()
            wire[q + 1] = fresh()
            union(wire[q], wire[q + 1])
        # the identity smoothing just continues both wires
    for p in range(strands):
        union(wire[p], bottom[p])
    return len({find(x) for x in range(len(parent))})


def jones_kauffman(word: BraidWord, max_crossings: int = 20) -> dict:
    """Unreduced Jones polynomial as {q_exponent: coefficient}.

    Normalized so the unknot gives q + 1/q; computed as the state sum over
    all smoothings with the cube convention (the 0-smoothing of a positive
    letter is the identity, of a negative letter the cup-cap).
    """
    k = len(word.letters)
    if k > max_crossings:
        raise ResourceLimitError(
            f"state sum over 2^{k} states exceeds the configured bound"
        )
    n_plus = sum(1 for g in word.letters if g > 0)
    n_minus = k - n_plus
    coeffs: dict[int, int] = {}
    for state_bits in range(1 << k):
        state = [(state_bits >> p) & 1 for p in range(k)]
        r = sum(state)
        loops = _closure_loop_count(word.strands, word.letters, state)
        # (-q)^r (q + 1/q)^loops
        sign = -1 if r % 2 else 1
        for c in range(loops + 1):
            coeff = sign * comb(loops, c)
            exponent = r + loops - 2 * c
            coeffs[exponent] = coeffs.get(exponent, 0) + coeff
    # global factor (-1)^n_minus q^(n_plus - 2 n_minus)
    shift = n_plus - 2 * n_minus
    sign = -1 if n_minus % 2 else 1
    out: dict[int, int] = {}
    for e, c in coeffs.items():
        val = sign * c
        if val:
            out[e + shift] = out.get(e + shift, 0) + val
    return {e: c for e, c in out.items() if c}
