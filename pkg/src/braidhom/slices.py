"""Full, unreduced degreewise instantiation of an assembled complex.

This is the reference route: one x-degree slice of the full tensor model,
with honest matrices for all three differentials, no variable exclusion.
Sizes grow quickly, so it is guarded by a configurable dimension bound and
used for structural verification and cross-validation of the reduced
engine on small braids; production table computations live in pipeline.py.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ResourceLimitError
from .gf2 import F2Matrix, Subquotient, induced_matrix, rank_ker_im
from .mfbuild import TripleComplexSpec, _mask_bits
from .polyring import monomial_basis


@dataclass(frozen=True)
class FullVertex:
    sigma: tuple[int, ...]
    v: int
    h_offset: int
    x_offset: int
    row_ids: tuple[int, ...]


def _full_vertices(spec: TripleComplexSpec) -> list[FullVertex]:
    out = []
    for sigma in sorted(spec.vertices):
        vm = spec.vertices[sigma]
        out.append(
            FullVertex(sigma, vm.v, vm.h_offset, vm.x_offset, vm.row_ids)
        )
    return out


def _gen_data(spec, fv: FullVertex):
    """All generator masks of the unreduced vertex with their (h, x) shifts."""
    masks = [0]
    for rid in fv.row_ids:
        bit = 1 << rid
        masks += [m | bit for m in masks]
    out = []
    for mask in sorted(masks):
        h = fv.h_offset - 2 * bin(mask).count("1")
        x = fv.x_offset + sum(spec.rows[r].deg_b for r in _mask_bits(mask))
        out.append((mask, h, x))
    return out


@dataclass
class DegreeSlice:
    """One x-degree of the full model: bases and differential matrices.

    ``bases[(i, j)]`` lists (sigma, mask, monomial); ``d_plus`` maps into
    (i+2, j) within the slice, ``d_v`` into (i, j+2) within the slice, and
    ``d_minus`` into (i-2, j) of the slice at x-degree + 6.
    """

    x_degree: int
    bases: dict
    d_plus: dict
    d_v: dict
    d_minus: dict

    def dims(self) -> dict:
        return {key: len(basis) for key, basis in self.bases.items() if basis}


def _slice_bases(spec, two_t: int):
    bases: dict = {}
    for fv in _full_vertices(spec):
        for mask, h, x in _gen_data(spec, fv):
            mono_deg = two_t - x
            if mono_deg < 0 or mono_deg % 2:
                continue
            for mono in monomial_basis(spec.nvars, mono_deg):
                bases.setdefault((h, fv.v), []).append((fv.sigma, mask, mono))
    return bases


def _matrix_between(spec, source, target, images_of):
    index = {bm: k for k, bm in enumerate(target)}
    entries = []
    for col, (sigma, mask, mono) in enumerate(source):
        for tgt_sigma, tgt_mask, poly in images_of(sigma, mask):
            for term in poly.terms:
                row = index.get((tgt_sigma, tgt_mask, mono + term))
                if row is not None:
                    entries.append((row, col))
    return F2Matrix.from_entries(len(target), len(source), entries)


def instantiate_slice(
    spec: TripleComplexSpec, two_t: int, max_dim: int = 200_000
) -> DegreeSlice:
    """Materialize the full model in one x-degree.

    Raises ResourceLimitError when the total basis size exceeds ``max_dim``.
    """
    if two_t % 2:
        raise ResourceLimitError("x-degrees are even")
    bases = _slice_bases(spec, two_t)
    total = sum(len(b) for b in bases.values())
    if total > max_dim:
        raise ResourceLimitError(
            f"slice dimension {total} exceeds the configured bound {max_dim}"
        )
    next_bases = _slice_bases(spec, two_t + 6)

    def d_plus_images(sigma, mask):
        vm = spec.vertices[sigma]
        for rid in vm.row_ids:
            bit = 1 << rid
            if mask & bit and spec.rows[rid].b:
                yield sigma, mask ^ bit, spec.rows[rid].b

    def d_minus_images(sigma, mask):
        vm = spec.vertices[sigma]
        for rid in vm.row_ids:
            bit = 1 << rid
            if not mask & bit and spec.rows[rid].a:
                yield sigma, mask | bit, spec.rows[rid].a

    def d_v_images(sigma, mask):
        for cidx in range(len(spec.crossings)):
            if sigma[cidx] != 0:
                continue
            tgt_sigma = sigma[:cidx] + (1,) + sigma[cidx + 1 :]
            src_rids = spec.level_rids[(cidx, 0)]
            tgt_rids = spec.level_rids[(cidx, 1)]
            local = 0
            rest = mask
            for pos, rid in enumerate(src_rids):
                if mask & (1 << rid):
                    local |= 1 << pos
                rest &= ~(1 << rid)
            for (smask, tmask), entry in spec.crossings[cidx].chi.items():
                if smask != local:
                    continue
                out_mask = rest
                for pos, rid in enumerate(tgt_rids):
                    if tmask & (1 << pos):
                        out_mask |= 1 << rid
                yield tgt_sigma, out_mask, entry

    d_plus = {}
    d_v = {}
    d_minus = {}
    for (i, j), basis in bases.items():
        d_plus[(i, j)] = _matrix_between(
            spec, basis, bases.get((i + 2, j), []), d_plus_images
        )
        d_v[(i, j)] = _matrix_between(
            spec, basis, bases.get((i, j + 2), []), d_v_images
        )
        d_minus[(i, j)] = _matrix_between(
            spec, basis, next_bases.get((i - 2, j), []), d_minus_images
        )
    return DegreeSlice(two_t, bases, d_plus, d_v, d_minus)


def check_slice_identities(spec, slice_a: DegreeSlice, slice_b: DegreeSlice):
    """Verify the differential identities on instantiated matrices.

    ``slice_b`` must be the slice six x-degrees above ``slice_a``.  Checks
    d_+^2 = d_v^2 = 0, commutation of d_+ with d_v within ``slice_a``, and
    commutation of the cross-slice d_- with both.  Raises on failure.
    """
    from .errors import InvariantViolationError

    za = slice_a
    zb = slice_b

    def mat(table, key, rows_key, cols_key, rows, cols):
        m = table.get(key)
        if m is not None:
            return m
        return F2Matrix.zeros(rows, cols)

    for (i, j), basis in za.bases.items():
        n = len(basis)
        up = za.d_plus[(i, j)]
        upup = za.d_plus.get((i + 2, j))
        if upup is not None and upup.ncols == up.nrows:
            if not (upup @ up).is_zero():
                raise InvariantViolationError("d_plus squared is nonzero")
        dv = za.d_v[(i, j)]
        dvv = za.d_v.get((i, j + 2))
        if dvv is not None and dvv.ncols == dv.nrows:
            if not (dvv @ dv).is_zero():
                raise InvariantViolationError("d_v squared is nonzero")
        # d_+ then d_v vs d_v then d_+
        up_then_dv = za.d_v.get((i + 2, j))
        dv_then_up = za.d_plus.get((i, j + 2))
        if up_then_dv is not None and dv_then_up is not None:
            lhs = up_then_dv @ up
            rhs = dv_then_up @ dv
            if lhs != rhs:
                raise InvariantViolationError("d_plus and d_v do not commute")
        dm = za.d_minus[(i, j)]
        # d_- then d_+ (in the target slice) vs d_+ then d_-
        dm_then_up = zb.d_plus.get((i - 2, j))
        up_then_dm = za.d_minus.get((i + 2, j))
        if dm_then_up is not None and up_then_dm is not None:
            if (dm_then_up @ dm) != (up_then_dm @ up):
                raise InvariantViolationError("d_minus and d_plus do not commute")
        dm_then_dv = zb.d_v.get((i - 2, j))
        dv_then_dm = za.d_minus.get((i, j + 2))
        if dm_then_dv is not None and dv_then_dm is not None:
            if (dm_then_dv @ dm) != (dv_then_dm @ dv):
                raise InvariantViolationError("d_minus and d_v do not commute")
        dm_then_dm = zb.d_minus.get((i - 2, j))
        if dm_then_dm is not None:
            if not (dm_then_dm @ dm).is_zero():
                raise InvariantViolationError("d_minus squared is nonzero")


def reference_homology_dims(spec: TripleComplexSpec, two_t: int, max_dim=200_000):
    """Dims of H(H(slice, d_+), d_v) per (i, j) computed on the full model.

    Used as an independent oracle for the reduced engine on small inputs.
    """
    sl = instantiate_slice(spec, two_t, max_dim)
    keys = sorted(sl.bases)
    # first pass: homology along d_+ with d_v carried
    sub: dict = {}
    for (i, j) in keys:
        basis = sl.bases[(i, j)]
        out_mat = sl.d_plus[(i, j)]
        _, kernel, _ = rank_ker_im(out_mat)
        cycles = list(kernel.rows)
        inc = sl.d_plus.get((i - 2, j))
        boundaries = []
        if inc is not None and inc.ncols:
            _, _, image = rank_ker_im(inc)
            boundaries = list(image.rows)
        sub[(i, j)] = Subquotient(len(basis), cycles, boundaries)
    induced_v: dict = {}
    for (i, j) in keys:
        tgt = (i, j + 2)
        if tgt in sub:
            induced_v[(i, j)] = induced_matrix(
                sl.d_v[(i, j)], sub[(i, j)], sub[tgt]
            )
    dims = {}
    for (i, j) in keys:
        sq = sub[(i, j)]
        out_mat = induced_v.get((i, j), F2Matrix.zeros(0, sq.dim))
        _, kernel, _ = rank_ker_im(out_mat)
        cycles = list(kernel.rows)
        inc = induced_v.get((i, j - 2))
        boundaries = list(rank_ker_im(inc)[2].rows) if inc is not None else []
        h2 = Subquotient(sq.dim, cycles, boundaries)
        if h2.dim:
            dims[(i, j)] = h2.dim
    return dims
