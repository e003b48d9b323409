"""Koszul matrix factorizations for diagram pieces and their assembly.

Every piece of a marked diagram carries a tensor product of two-term Koszul
factors K(a, b): the free module R{deg b}_x in horizontal degree -2 and R in
horizontal degree 0, with positive differential multiplication by b
(x-degree preserving) and negative differential multiplication by a
(x-degree +6).  deg a + deg b = 6 throughout; a zero entry carries its
declared formal degree.

An arc with endpoint variables (in, out) gets the single factor
(out^2 + out*in + in^2, out + in); a one-point circle degenerates to
(x^2, 0) with declared deg b = 2.  The singular resolution of a crossing
with in-variables (i, j) and out-variables (s, t) gets the two rows

    (s^2+t^2+i^2+j^2+t(s+i+j), s+t+i+j)   and   (i+j, (s+i)(s+j))

with a global x-shift of -1.  The oriented resolution inside a crossing
complex is the tensor of the two arc factors with the negative entries
normalized by a syzygy twist a -> a + mu*b' (mu a linear form found by the
morphism solver); the twist changes nothing up to homotopy equivalence but
is what makes honest degree-1 morphisms chi in both directions exist that
commute with both differentials on the nose.  The solver finds the chi pair
and certifies that both composites act as multiplication by (s + j) on the
homology of either resolution.

The assembled complex of a closed braid is reduced vertex by vertex:
whenever a Koszul row has a nonzero linear b entry, the row is contracted
and one variable is eliminated by substitution.  The contraction is a strong
deformation retraction for the positive differential, so slice homology and
all maps induced on it are computed on the small model and lifted back
through an explicit section when a chain map (chi, negative differential,
multiplication, homotopy) has to be applied.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass
from functools import lru_cache

from .braid import ArcPiece, BraidWord, CrossingPiece, MarkedDiagram, closure_stats
from .errors import InvariantViolationError, UsageError
from .gf2 import Echelon, F2Matrix, Subquotient, induced_matrix, rank_ker_im
from .polyring import Poly, monomial_basis


class ChiSolutionError(InvariantViolationError):
    """The morphism solver found no valid chi pair (convention bug)."""


@dataclass(frozen=True)
class KoszulFactor:
    """One Koszul row (a, b) with the declared x-degree of the b slot."""

    a: Poly
    b: Poly
    deg_b: int

    def __post_init__(self):
        if self.deg_b not in (2, 4):
            raise UsageError(f"deg_b must be 2 or 4, got {self.deg_b}")
        if self.b and self.b.x_degree() != self.deg_b:
            raise UsageError("b entry does not match its declared degree")
        if self.a and self.a.x_degree() != 6 - self.deg_b:
            raise UsageError("a entry does not have the complementary degree")

    def potential(self) -> Poly:
        return self.a * self.b


def arc_factor(nvars: int, var_in: int, var_out: int) -> KoszulFactor:
    """Koszul factor of an arc piece; equal endpoints give the (x^2, 0) row."""
    xi = Poly.variable(nvars, var_in)
    xs = Poly.variable(nvars, var_out)
    a = xs * xs + xs * xi + xi * xi
    b = xs + xi
    return KoszulFactor(a=a, b=b, deg_b=2)


def gamma1_factors(
    nvars: int, i: int, j: int, s: int, t: int
) -> tuple[tuple[KoszulFactor, KoszulFactor], int]:
    """Rows of the singular (wide-edge) resolution and its global x-shift."""
    xi, xj, xs, xt = (Poly.variable(nvars, k) for k in (i, j, s, t))
    u = xs * xs + xt * xt + xi * xi + xj * xj + xt * (xs + xi + xj)
    e = xs + xt + xi + xj
    p = xi + xj
    v = (xs + xi) * (xs + xj)
    return (KoszulFactor(u, e, 2), KoszulFactor(p, v, 4)), -1


def gamma0_factors(
    nvars: int, i: int, j: int, s: int, t: int
) -> tuple[tuple[KoszulFactor, KoszulFactor], int]:
    """Rows of the oriented resolution: the two arc factors, no x-shift."""
    return (arc_factor(nvars, i, s), arc_factor(nvars, j, t)), 0


def gamma0_factors_twisted(
    nvars: int, i: int, j: int, s: int, t: int, mu_vars: tuple[int, ...]
) -> tuple[tuple[KoszulFactor, KoszulFactor], int]:
    """Oriented-resolution rows with the syzygy twist a -> a + mu * b'.

    The twist adds mu times the other row's b entry to each a entry, which
    preserves the total potential and the homotopy type but normalizes the
    negative differential so that strict chi morphisms exist.
    """
    (r1, r2), shift = gamma0_factors(nvars, i, j, s, t)
    mu = Poly.from_vars(nvars, mu_vars)
    return (
        KoszulFactor(r1.a + mu * r2.b, r1.b, r1.deg_b),
        KoszulFactor(r2.a + mu * r1.b, r2.b, r2.deg_b),
    ), shift


def piece_mf(piece, nvars: int | None = None):
    """Koszul factors plus global x-shift for a piece.

    Accepts an ``ArcPiece`` or a pair ``("gamma0" | "gamma1", (i, j, s, t))``
    naming a crossing resolution.
    """
    if isinstance(piece, ArcPiece):
        n = nvars if nvars is not None else max(piece.in_var, piece.out_var) + 1
        return [arc_factor(n, piece.in_var, piece.out_var)], 0
    if isinstance(piece, tuple) and len(piece) == 2:
        kind, variables = piece
        n = nvars if nvars is not None else max(variables) + 1
        if kind == "gamma0":
            rows, shift = gamma0_factors(n, *variables)
            return list(rows), shift
        if kind == "gamma1":
            rows, shift = gamma1_factors(n, *variables)
            return list(rows), shift
    raise UsageError(f"unknown piece {piece!r}")


# ---------------------------------------------------------------------------
# Morphism solver for the chi maps
# ---------------------------------------------------------------------------

_LOCAL_N = 4  # local ring variables, in the order (i, j, s, t)
_LI, _LJ, _LS, _LT = range(4)


def _mask_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask &= mask - 1


class _Module:
    """Tensor of Koszul rows over the local ring, with a global x-shift."""

    def __init__(self, rows, x_shift: int):
        self.rows = list(rows)
        self.x_shift = x_shift
        self.masks = list(range(1 << len(rows)))

    def h(self, mask: int) -> int:
        return -2 * bin(mask).count("1")

    def x(self, mask: int) -> int:
        return self.x_shift + sum(self.rows[r].deg_b for r in _mask_bits(mask))

    def d_plus(self, mask: int):
        for r in _mask_bits(mask):
            yield mask ^ (1 << r), self.rows[r].b

    def d_minus(self, mask: int):
        for r in range(len(self.rows)):
            if not mask & (1 << r):
                yield mask | (1 << r), self.rows[r].a


def _slice_basis(module: _Module, h: int, xdeg: int):
    basis = []
    for mask in module.masks:
        if module.h(mask) != h:
            continue
        mono_deg = xdeg - module.x(mask)
        if mono_deg < 0 or mono_deg % 2:
            continue
        for mono in monomial_basis(_LOCAL_N, mono_deg):
            basis.append((mask, mono))
    return basis


def _slice_matrix(module, source, target, images):
    """Matrix of a map given by ``images: mask -> list of (tgt mask, Poly)``."""
    index = {bm: k for k, bm in enumerate(target)}
    entries = []
    for col, (mask, mono) in enumerate(source):
        for tgt_mask, poly in images(mask):
            for term in poly.terms:
                row = index.get((tgt_mask, mono + term))
                if row is not None:
                    entries.append((row, col))
    return F2Matrix.from_entries(len(target), len(source), entries)


def _module_homology(module: _Module, xmax: int):
    """Subquotients H(d_+) per (h, xdeg) with xdeg <= xmax, with their bases."""
    out = {}
    parity = module.x_shift & 1
    for h in (-4, -2, 0):
        for xdeg in range(module.x_shift, xmax + 1):
            if (xdeg - parity) % 2:
                continue
            basis = _slice_basis(module, h, xdeg)
            if not basis:
                continue
            below = _slice_basis(module, h - 2, xdeg)
            above = _slice_basis(module, h + 2, xdeg)
            d_out = _slice_matrix(module, basis, above, module.d_plus)
            d_in = _slice_matrix(module, below, basis, module.d_plus)
            _, kernel, _ = rank_ker_im(d_out)
            _, _, image = rank_ker_im(d_in)
            sq = Subquotient(len(basis), list(kernel.rows), list(image.rows))
            out[(h, xdeg)] = (sq, basis)
    return out


def _morphism_space(src: _Module, tgt: _Module, dx: int):
    """Basis of maps of degree (0, dx) commuting with both differentials.

    Unknowns are the monomial coefficients of each block entry; the strict
    commutation conditions with d_+ and d_- give a homogeneous linear system
    over GF(2).
    """
    slots: dict[tuple[int, int], tuple[int, tuple]] = {}
    total = 0
    for smask in src.masks:
        for tmask in tgt.masks:
            if src.h(smask) != tgt.h(tmask):
                continue
            deg = src.x(smask) + dx - tgt.x(tmask)
            if deg < 0 or deg % 2:
                continue
            monos = monomial_basis(_LOCAL_N, deg)
            slots[(smask, tmask)] = (total, monos)
            total += len(monos)

    equations: dict[tuple, int] = {}

    def add(eq_key, smask, tmid, coeff: Poly):
        """Accumulate unknowns of entry(smask -> tmid) multiplied by coeff."""
        slot = slots.get((smask, tmid))
        if slot is None or not coeff:
            return
        base, monos = slot
        for k, m in enumerate(monos):
            for term in coeff.terms:
                key = eq_key + (m + term,)
                equations[key] = equations.get(key, 0) ^ (1 << (base + k))

    for direction in ("plus", "minus"):
        src_step = src.d_plus if direction == "plus" else src.d_minus
        tgt_step = tgt.d_plus if direction == "plus" else tgt.d_minus
        for smask in src.masks:
            # phi(d(smask)): through an intermediate source mask
            for mid, coeff in src_step(smask):
                for tmask in tgt.masks:
                    add((direction, smask, tmask), mid, tmask, coeff)
            # d(phi(smask)): through an intermediate target mask
            for tmid in tgt.masks:
                for tmask, coeff in tgt_step(tmid):
                    add((direction, smask, tmask), smask, tmid, coeff)

    eq_matrix = F2Matrix(len(equations), total, list(equations.values()))
    _, kernel, _ = rank_ker_im(eq_matrix)

    basis = []
    for vec in kernel.rows:
        entries = {}
        for (smask, tmask), (base, monos) in slots.items():
            terms = [
                monos[k] for k in range(len(monos)) if vec & (1 << (base + k))
            ]
            if terms:
                entries[(smask, tmask)] = Poly(_LOCAL_N, terms)
        basis.append(entries)
    return basis


def _combine(basis, coeffs: int):
    out: dict[tuple[int, int], Poly] = {}
    k = coeffs
    idx = 0
    while k:
        if k & 1:
            for key, poly in basis[idx].items():
                out[key] = out.get(key, Poly.zero(_LOCAL_N)) + poly
        k >>= 1
        idx += 1
    return {key: p for key, p in out.items() if p}


def _induced_on_homology(entries, src_mod, src_hom, tgt_hom, dx, source_xmax):
    """Induced homology matrices of a strict morphism, per source slice.

    Only source slices with xdeg <= source_xmax are induced; the caller must
    have computed target homology out to source_xmax + dx.
    """
    out = {}
    for (h, xdeg), (sq, basis) in src_hom.items():
        if xdeg > source_xmax:
            continue
        tgt = tgt_hom.get((h, xdeg + dx))
        if tgt is None:
            if sq.dim:
                raise InvariantViolationError("missing target homology slice")
            continue
        tsq, tbasis = tgt

        def images(mask, entries=entries):
            for (smask, tmask), poly in entries.items():
                if smask == mask:
                    yield tmask, poly

        mat = _slice_matrix(src_mod, basis, tbasis, images)
        cols = [tsq.reduce(mat.apply(rep)) for rep in sq.reps]
        out[(h, xdeg)] = F2Matrix.from_columns(cols, tsq.dim)
    return out


def _combine_actions(per_basis: list[dict], coeffs: int):
    out: dict = {}
    idx = 0
    k = coeffs
    while k:
        if k & 1:
            for key, mat in per_basis[idx].items():
                out[key] = out[key] + mat if key in out else mat
        k >>= 1
        idx += 1
    return out


_XMAX = 8  # source window for the composite certification
_XWIN = _XMAX + 2  # homology window (composites raise x-degree by 2)


@lru_cache(maxsize=None)
def solve_chi_pairs() -> tuple:
    """Solve for the twist mu and the strict chi pairs, deterministically.

    Returns ``(mu_vars, pairs)`` where each pair is ``(chi0, chi1)`` given as
    entry dictionaries over the local ring.  All returned pairs commute with
    both differentials exactly, and their composites act as multiplication
    by (s + j) on every homology slice of either resolution up to x-degree 8.
    """
    g1_rows, g1_shift = gamma1_factors(_LOCAL_N, _LI, _LJ, _LS, _LT)
    gamma1 = _Module(g1_rows, g1_shift)
    hom1 = _module_homology(gamma1, _XWIN + 1)
    xs_xj = Poly.variable(_LOCAL_N, _LS) + Poly.variable(_LOCAL_N, _LJ)
    mult1 = {(m, m): xs_xj for m in gamma1.masks}
    target1 = _induced_on_homology(mult1, gamma1, hom1, hom1, 2, _XMAX)

    for bits in range(16):
        mu_vars = tuple(k for k in range(4) if bits & (1 << k))
        g0_rows, _ = gamma0_factors_twisted(_LOCAL_N, _LI, _LJ, _LS, _LT, mu_vars)
        gamma0 = _Module(g0_rows, 0)
        space0 = _morphism_space(gamma0, gamma1, 1)
        space1 = _morphism_space(gamma1, gamma0, 1)
        if not space0 or not space1:
            continue
        hom0 = _module_homology(gamma0, _XWIN)
        mult0 = {(m, m): xs_xj for m in gamma0.masks}
        target0 = _induced_on_homology(mult0, gamma0, hom0, hom0, 2, _XMAX)

        acts0 = [
            _induced_on_homology(phi, gamma0, hom0, hom1, 1, _XMAX + 1)
            for phi in space0
        ]
        acts1 = [
            _induced_on_homology(psi, gamma1, hom1, hom0, 1, _XMAX + 1)
            for psi in space1
        ]

        pairs = []
        for c0 in range(1, 1 << len(space0)):
            act0 = _combine_actions(acts0, c0)
            for c1 in range(1, 1 << len(space1)):
                act1 = _combine_actions(acts1, c1)
                if _composites_match(act0, act1, target0, target1):
                    pairs.append((_combine(space0, c0), _combine(space1, c1)))
                    if len(pairs) >= 2:
                        return mu_vars, tuple(pairs)
        if pairs:
            return mu_vars, tuple(pairs)
    raise ChiSolutionError(
        "no strict chi morphisms found for any twist; conventions are broken"
    )


def _composites_match(act0, act1, target0, target1) -> bool:
    for (h, xdeg), t_mat in target0.items():
        a0 = act0.get((h, xdeg))
        a1 = act1.get((h, xdeg + 1))
        if a0 is None or a1 is None:
            if t_mat.ncols or t_mat.nrows:
                return False
            continue
        if a1 @ a0 != t_mat:
            return False
    for (h, xdeg), t_mat in target1.items():
        a1 = act1.get((h, xdeg))
        a0 = act0.get((h, xdeg + 1))
        if a1 is None or a0 is None:
            if t_mat.ncols or t_mat.nrows:
                return False
            continue
        if a0 @ a1 != t_mat:
            return False
    return True


def chi_pair(variables: tuple[int, int, int, int], nvars: int, solution: int = 0):
    """The solved chi pair renamed into the global ring.

    ``variables`` is the crossing's (i, j, s, t); entries of the returned
    maps are polynomials in the ``nvars``-variable ring.
    """
    mu_vars, pairs = solve_chi_pairs()
    if solution >= len(pairs):
        raise UsageError(f"only {len(pairs)} chi solutions available")
    chi0, chi1 = pairs[solution]
    var_map = dict(zip(range(4), variables))
    renamed0 = {
        key: poly.rename(var_map, nvars) for key, poly in chi0.items()
    }
    renamed1 = {
        key: poly.rename(var_map, nvars) for key, poly in chi1.items()
    }
    return renamed0, renamed1


def twist_mu_vars() -> tuple[int, ...]:
    """Local-variable indices of the solved syzygy twist mu."""
    return solve_chi_pairs()[0]


# ---------------------------------------------------------------------------
# Crossing complexes and the assembled spec
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CrossingLevel:
    v: int
    h_shift: int
    x_shift: int
    rows: tuple[KoszulFactor, KoszulFactor]
    kind: str  # "gamma0" | "gamma1"


@dataclass(frozen=True)
class CrossingComplexData:
    """Two cube levels of one crossing and the vertical edge between them."""

    sign: int
    variables: tuple[int, int, int, int]
    lower: CrossingLevel
    upper: CrossingLevel
    chi: dict  # (source mask, target mask) -> Poly, lower -> upper


def crossing_complex(
    sign: int, variables: tuple[int, int, int, int], nvars: int, solution: int = 0
) -> CrossingComplexData:
    """Crossing complex with solved vertical edge.

    Positive crossings place the singular resolution at vertical -2 and the
    oriented resolution at vertical 0, both with horizontal shift +2 and
    total x-shifts -2; the edge is chi1.  Negative crossings place the
    oriented resolution at vertical 0 (shift -2 horizontal, +2 in x) under
    the singular resolution at vertical 2 (x-shift 0 total); the edge is
    chi0.
    """
    i, j, s, t = variables
    mu_local = twist_mu_vars()
    mu_global = tuple(variables[k] for k in mu_local)
    g1_rows, g1_shift = gamma1_factors(nvars, i, j, s, t)
    g0_rows, _ = gamma0_factors_twisted(nvars, i, j, s, t, mu_global)
    chi0, chi1 = chi_pair(variables, nvars, solution)
    if sign > 0:
        lower = CrossingLevel(-2, 2, g1_shift - 1, g1_rows, "gamma1")
        upper = CrossingLevel(0, 2, -2, g0_rows, "gamma0")
        edge = chi1
    else:
        lower = CrossingLevel(0, -2, 2, g0_rows, "gamma0")
        upper = CrossingLevel(2, -2, g1_shift + 1, g1_rows, "gamma1")
        edge = chi0
    return CrossingComplexData(sign, variables, lower, upper, edge)


@dataclass(frozen=True)
class RowRecord:
    rid: int
    a: Poly
    b: Poly
    deg_b: int
    kind: str  # "arc" | "level"
    crossing: int  # -1 for arcs
    level: int  # -1 for arcs, else 0 lower / 1 upper
    component: int  # component for arcs, -1 for level rows
    reserved: bool


@dataclass(frozen=True)
class ExclusionStep:
    rid: int
    var: int
    f: Poly  # substitution for var, in the coordinates of its step
    alive_b: dict  # rid -> b entry (partially substituted) before this step


@dataclass(frozen=True)
class KeptRow:
    rid: int
    a: Poly
    b: Poly
    deg_b: int


@dataclass(frozen=True)
class VertexModel:
    sigma: tuple[int, ...]
    v: int
    h_offset: int
    x_offset: int
    row_ids: tuple[int, ...]
    kept: tuple[KeptRow, ...]
    exclusions: tuple[ExclusionStep, ...]
    subs_final: dict
    survivors: tuple[int, ...]

    def gen_masks(self) -> list[int]:
        """All generator masks over kept rows (bits are global row ids)."""
        bits = [1 << row.rid for row in self.kept]
        masks = [0]
        for bit in bits:
            masks += [m | bit for m in masks]
        return sorted(masks)

    def gen_h(self, mask: int) -> int:
        return self.h_offset - 2 * bin(mask).count("1")

    def gen_x(self, mask: int) -> int:
        acc = self.x_offset
        for row in self.kept:
            if mask & (1 << row.rid):
                acc += row.deg_b
        return acc


class TripleComplexSpec:
    """The assembled three-differential complex of a marked closed braid."""

    def __init__(
        self,
        diagram: MarkedDiagram,
        normalized: bool = True,
        reserved_component: int | None = None,
        chi_solution: int = 0,
    ):
        self.diagram = diagram
        self.nvars = diagram.nvars
        self.normalized = normalized
        self.reserved_component = reserved_component
        self.chi_solution = chi_solution
        stats = closure_stats(diagram.word)
        self.stats = stats
        self.v_shift = stats.writhe - stats.strands if normalized else 0
        self.h_shift = stats.strands - stats.writhe if normalized else 0

        # Arc pieces with distinct endpoints are global tensor factors on
        # which every differential acts as the identity, so they contract
        # at build time: each arc identifies its two endpoint marks and its
        # row disappears.  This is an exact strong deformation retraction
        # of the whole triple complex; circles and a reserved arc (for the
        # homotopy of one component) keep their rows.
        reserved_arc = None
        if reserved_component is not None:
            for piece in diagram.pieces:
                if (
                    isinstance(piece, ArcPiece)
                    and diagram.component_of_variable[piece.in_var]
                    == reserved_component
                ):
                    reserved_arc = piece
                    break
            if reserved_arc is None:
                raise UsageError(
                    f"component {reserved_component} has no arc piece to reserve"
                )
        self.arc_subs: dict = {}
        for piece in diagram.pieces:
            if not isinstance(piece, ArcPiece) or piece is reserved_arc:
                continue
            if piece.in_var == piece.out_var:
                continue
            lo, hi = sorted((piece.in_var, piece.out_var))
            self.arc_subs[hi] = Poly.variable(self.nvars, lo)

        self.crossings: list[CrossingComplexData] = []
        rows: list[RowRecord] = []
        reserved_rid = None
        for piece in diagram.pieces:
            if isinstance(piece, ArcPiece) and (
                piece is reserved_arc or piece.in_var == piece.out_var
            ):
                comp = diagram.component_of_variable[piece.in_var]
                factor = arc_factor(self.nvars, piece.in_var, piece.out_var)
                rid = len(rows)
                rows.append(
                    RowRecord(
                        rid,
                        factor.a.substitute(self.arc_subs),
                        factor.b.substitute(self.arc_subs),
                        factor.deg_b,
                        "arc",
                        -1,
                        -1,
                        comp,
                        piece is reserved_arc,
                    )
                )
                if piece is reserved_arc:
                    reserved_rid = rid
        for piece in diagram.pieces:
            if isinstance(piece, CrossingPiece):
                data = crossing_complex(
                    piece.sign, piece.variables, self.nvars, chi_solution
                )
                data = _substitute_crossing(data, self.arc_subs)
                cidx = len(self.crossings)
                self.crossings.append(data)
                for level_idx, level in enumerate((data.lower, data.upper)):
                    for factor in level.rows:
                        rid = len(rows)
                        rows.append(
                            RowRecord(
                                rid,
                                factor.a,
                                factor.b,
                                factor.deg_b,
                                "level",
                                cidx,
                                level_idx,
                                -1,
                                False,
                            )
                        )
        self.rows = tuple(rows)
        self.reserved_rid = reserved_rid
        self._chi_src_cache: dict = {}
        active: set[int] = set()
        for row in rows:
            active |= row.a.support() | row.b.support()
        self.active_vars = tuple(sorted(active))
        # level row ids per (crossing, level): order matches the factor order
        self.level_rids: dict[tuple[int, int], tuple[int, int]] = {}
        for row in rows:
            if row.kind == "level":
                key = (row.crossing, row.level)
                cur = self.level_rids.get(key, ())
                self.level_rids[key] = cur + (row.rid,)

        self.vertices: dict[tuple[int, ...], VertexModel] = {}
        k = len(self.crossings)
        for sigma in itertools.product((0, 1), repeat=k):
            self.vertices[sigma] = self._reduce_vertex(sigma)
        # positive crossings shift generators into negative x-degrees
        self.x_min = min(vm.x_offset for vm in self.vertices.values())
        self.spec_hash = hashlib.sha256(
            json.dumps(self.to_json(), sort_keys=True).encode()
        ).hexdigest()[:16]

    # -- construction -----------------------------------------------------

    def _vertex_rows(self, sigma) -> list[RowRecord]:
        out = [r for r in self.rows if r.kind == "arc"]
        for cidx, level in enumerate(sigma):
            for rid in self.level_rids[(cidx, level)]:
                out.append(self.rows[rid])
        return sorted(out, key=lambda r: r.rid)

    def _reduce_vertex(self, sigma) -> VertexModel:
        v = self.v_shift
        h_off = self.h_shift
        x_off = 0
        for cidx, level_choice in enumerate(sigma):
            level = (
                self.crossings[cidx].lower
                if level_choice == 0
                else self.crossings[cidx].upper
            )
            v += level.v
            h_off += level.h_shift
            x_off += level.x_shift

        alive: dict[int, tuple[Poly, Poly, int]] = {}
        reserved: set[int] = set()
        for row in self._vertex_rows(sigma):
            alive[row.rid] = (row.a, row.b, row.deg_b)
            if row.reserved:
                reserved.add(row.rid)

        exclusions: list[ExclusionStep] = []
        while True:
            pick = None
            for rid in sorted(alive):
                if rid in reserved:
                    continue
                _, b, _ = alive[rid]
                if b and b.degree() == 1:
                    pick = rid
                    break
            if pick is None:
                break
            a, b, deg_b = alive[pick]
            var = max(b.support())
            f = b + Poly.variable(self.nvars, var)
            snapshot = {rid: entry[1] for rid, entry in alive.items()}
            exclusions.append(ExclusionStep(pick, var, f, snapshot))
            del alive[pick]
            sub = {var: f}
            for rid in list(alive):
                ra, rb, rdeg = alive[rid]
                alive[rid] = (ra.substitute(sub), rb.substitute(sub), rdeg)

        subs_final: dict[int, Poly] = {}
        for step in reversed(exclusions):
            subs_final[step.var] = step.f.substitute(subs_final)
        survivors = tuple(
            k for k in self.active_vars if k not in subs_final
        )
        kept = tuple(
            KeptRow(rid, alive[rid][0], alive[rid][1], alive[rid][2])
            for rid in sorted(alive)
        )
        return VertexModel(
            sigma=sigma,
            v=v,
            h_offset=h_off,
            x_offset=x_off,
            row_ids=tuple(r.rid for r in self._vertex_rows(sigma)),
            kept=kept,
            exclusions=tuple(exclusions),
            subs_final=subs_final,
            survivors=survivors,
        )

    # -- symbolic chain operations on full-model vectors -------------------
    #
    # A symbolic chain vector at a vertex is a dict {row mask -> Poly} in the
    # full coordinates of that vertex (mask bits are global row ids).

    def lift(self, vm: VertexModel, vector: dict) -> dict:
        """Section of the reduction: reduced vector -> full d_+-cycle."""
        w = {mask: poly for mask, poly in vector.items() if poly}
        for step in reversed(vm.exclusions):
            alive_b = step.alive_b
            bit = 1 << step.rid
            image: dict[int, Poly] = {}
            for mask, poly in w.items():
                for rid, b in alive_b.items():
                    rbit = 1 << rid
                    if mask & rbit and b:
                        tgt = mask ^ rbit
                        acc = image.get(tgt, Poly.zero(self.nvars)) + b * poly
                        if acc:
                            image[tgt] = acc
                        elif tgt in image:
                            del image[tgt]
            for mask, poly in image.items():
                if mask & bit:
                    continue
                q = _quotient_by_linear(poly, step.var, step.f)
                if q:
                    tgt = mask | bit
                    acc = w.get(tgt, Poly.zero(self.nvars)) + q
                    if acc:
                        w[tgt] = acc
                    elif tgt in w:
                        del w[tgt]
        return w

    def project(self, vm: VertexModel, vector: dict) -> dict:
        """Projection of the reduction: full vector -> reduced coordinates."""
        excluded_bits = 0
        for step in vm.exclusions:
            excluded_bits |= 1 << step.rid
        out: dict[int, Poly] = {}
        for mask, poly in vector.items():
            if mask & excluded_bits:
                continue
            p = poly.substitute(vm.subs_final)
            if p:
                acc = out.get(mask, Poly.zero(self.nvars)) + p
                if acc:
                    out[mask] = acc
                elif mask in out:
                    del out[mask]
        return out

    def d_plus_full(self, vm: VertexModel, vector: dict) -> dict:
        out: dict[int, Poly] = {}
        for mask, poly in vector.items():
            for rid in vm.row_ids:
                bit = 1 << rid
                if mask & bit:
                    b = self.rows[rid].b
                    if b:
                        _acc(out, mask ^ bit, b * poly, self.nvars)
        return out

    def d_minus_full(self, vm: VertexModel, vector: dict) -> dict:
        out: dict[int, Poly] = {}
        for mask, poly in vector.items():
            for rid in vm.row_ids:
                bit = 1 << rid
                if not mask & bit:
                    a = self.rows[rid].a
                    if a:
                        _acc(out, mask | bit, a * poly, self.nvars)
        return out

    def _chi_by_source(self, cidx: int) -> dict:
        """chi entries of a crossing, indexed by local source mask, with the
        target masks already translated to global row bits."""
        cached = self._chi_src_cache.get(cidx)
        if cached is not None:
            return cached
        data = self.crossings[cidx]
        tgt_rids = self.level_rids[(cidx, 1)]
        table: dict[int, list] = {}
        for (smask, tmask), entry in data.chi.items():
            tgt_bits = 0
            for pos, rid in enumerate(tgt_rids):
                if tmask & (1 << pos):
                    tgt_bits |= 1 << rid
            table.setdefault(smask, []).append((tgt_bits, entry))
        self._chi_src_cache[cidx] = table
        return table

    def chi_full(self, cidx: int, vector: dict) -> dict:
        """Vertical edge of crossing ``cidx``: lower-level -> upper-level."""
        src_rids = self.level_rids[(cidx, 0)]
        src_bits = 0
        for rid in src_rids:
            src_bits |= 1 << rid
        table = self._chi_by_source(cidx)
        out: dict[int, Poly] = {}
        for mask, poly in vector.items():
            local_src = 0
            for pos, rid in enumerate(src_rids):
                if mask & (1 << rid):
                    local_src |= 1 << pos
            rest = mask & ~src_bits
            for tgt_bits, entry in table.get(local_src, ()):
                _acc(out, rest | tgt_bits, entry * poly, self.nvars)
        return out

    def mult_full(self, var: int, vector: dict) -> dict:
        xv = Poly.variable(self.nvars, var)
        return {mask: xv * poly for mask, poly in vector.items()}

    def homotopy_full(self, rid: int, vector: dict) -> dict:
        """Row contraction: drop the reserved row from masks that contain it."""
        out: dict[int, Poly] = {}
        bit = 1 << rid
        for mask, poly in vector.items():
            if mask & bit:
                _acc(out, mask ^ bit, poly, self.nvars)
        return out

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        def poly_json(p: Poly):
            return [list(t) for t in p.exponent_tuples()]

        vertices = []
        for sigma in sorted(self.vertices):
            vm = self.vertices[sigma]
            vertices.append(
                {
                    "sigma": list(sigma),
                    "v": vm.v,
                    "h_offset": vm.h_offset,
                    "x_offset": vm.x_offset,
                    "kept": [
                        {
                            "rid": row.rid,
                            "a": poly_json(row.a),
                            "b": poly_json(row.b),
                            "deg_b": row.deg_b,
                        }
                        for row in vm.kept
                    ],
                    "excluded": [step.rid for step in vm.exclusions],
                    "survivors": list(vm.survivors),
                }
            )
        return {
            "braid": self.diagram.word.text(),
            "nvars": self.nvars,
            "normalized": self.normalized,
            "reserved_component": self.reserved_component,
            "chi_solution": self.chi_solution,
            "rows": [
                {
                    "rid": r.rid,
                    "a": poly_json(r.a),
                    "b": poly_json(r.b),
                    "deg_b": r.deg_b,
                    "kind": r.kind,
                }
                for r in self.rows
            ],
            "vertices": vertices,
        }


def _substitute_crossing(
    data: CrossingComplexData, subs: dict
) -> CrossingComplexData:
    """Apply a variable substitution to a crossing complex (a ring map)."""
    if not subs:
        return data

    def sub_level(level: CrossingLevel) -> CrossingLevel:
        rows = tuple(
            KoszulFactor(f.a.substitute(subs), f.b.substitute(subs), f.deg_b)
            for f in level.rows
        )
        return CrossingLevel(level.v, level.h_shift, level.x_shift, rows, level.kind)

    chi = {key: poly.substitute(subs) for key, poly in data.chi.items()}
    return CrossingComplexData(
        data.sign, data.variables, sub_level(data.lower), sub_level(data.upper), chi
    )


def _acc(out: dict, mask: int, poly: Poly, nvars: int) -> None:
    if not poly:
        return
    acc = out.get(mask, Poly.zero(nvars)) + poly
    if acc:
        out[mask] = acc
    elif mask in out:
        del out[mask]


def _quotient_by_linear(g: Poly, var: int, f: Poly) -> Poly:
    """Quotient q with g = g|_{var:=f} + (var + f) * q over GF(2).

    Expands each term's power of ``var`` as a geometric sum; no remainder
    arithmetic is needed because the substitution difference is exactly
    divisible.
    """
    from .polyring import FIELD_BITS, _MASK

    n = g.nvars
    shift = FIELD_BITS * var
    acc: set = set()
    f_pows = {0: Poly.one(n)}

    def fpow(e: int) -> Poly:
        if e not in f_pows:
            f_pows[e] = fpow(e - 1) * f
        return f_pows[e]

    for term in g.terms:
        e = (term >> shift) & _MASK
        if e == 0:
            continue
        rest = term & ~(_MASK << shift)
        for t in range(e):
            base = rest | (t << shift)
            for fterm in fpow(e - 1 - t).terms:
                m = base + fterm
                if m in acc:
                    acc.discard(m)
                else:
                    acc.add(m)
    return Poly(n, acc)


def assemble(
    diagram: MarkedDiagram,
    stats=None,
    normalized: bool = True,
    reserved_component: int | None = None,
    chi_solution: int = 0,
) -> TripleComplexSpec:
    """Build the reduced three-differential complex of a marked diagram."""
    return TripleComplexSpec(
        diagram,
        normalized=normalized,
        reserved_component=reserved_component,
        chi_solution=chi_solution,
    )


@dataclass(frozen=True)
class HomotopyData:
    """The row-contraction homotopy for one component, with its spec."""

    spec: TripleComplexSpec
    rid: int
    component: int
    variable: int  # a variable marking the component (for the x^2 identity)


def homotopy_h(spec: TripleComplexSpec, component: int) -> HomotopyData:
    """Homotopy h for a component, re-assembling the spec with a reserved arc.

    The map sends the horizontal -2 generator of the reserved arc row to the
    horizontal 0 generator and kills the rest; it raises the horizontal
    grading by 2 and lowers the x-grading by 2, commutes with the positive
    and vertical differentials, and its anticommutator with the negative
    differential is multiplication by the arc's a entry.
    """
    if component < 0 or component >= spec.diagram.components:
        raise UsageError(f"no component {component}")
    if spec.reserved_component != component or spec.reserved_rid is None:
        spec = TripleComplexSpec(
            spec.diagram,
            normalized=spec.normalized,
            reserved_component=component,
            chi_solution=spec.chi_solution,
        )
    row = spec.rows[spec.reserved_rid]
    variable = max(row.b.support()) if row.b else max(row.a.support())
    return HomotopyData(spec, spec.reserved_rid, component, variable)
