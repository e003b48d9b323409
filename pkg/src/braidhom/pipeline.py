"""Orchestration: graded dimension tables and spectral-sequence pages.

The engine computes, per x-degree slice and per cube vertex, the homology
of the reduced model along the positive differential (stage one), then the
homology of the vertical differential induced on those classes (stage two,
the triply graded table), the page obtained by taking homology of the
induced negative differential (the second page), and the total homology of
the induced double complex per quantum degree (the Khovanov table).

Chain maps are never materialized on the reduced models; they are applied
to homology representatives by lifting through the contraction section of
mfbuild, acting in the full coordinates, and projecting back.  All induced
matrices compose functorially, which is what the page computations use.

Slice homology is cached on disk keyed by (spec hash, x-degree) and slices
are computed by a small thread pool; published results are immutable.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .braid import BraidWord, build_marked_diagram, closure_stats
from .errors import InvariantViolationError, ResourceLimitError, UsageError
from .gf2 import F2Matrix, Subquotient, rank_ker_im
from .mfbuild import TripleComplexSpec, assemble, homotopy_h
from .polyring import Poly, monomials_over


@dataclass(frozen=True)
class EngineConfig:
    max_slice_dim: int = 2_000_000
    parallel: int = 1
    cache_dir: str | None = None
    use_cache: bool = False
    check_sections: bool = False  # assert that lifted representatives are cycles

    def __post_init__(self):
        if self.parallel < 1:
            raise UsageError("parallelism must be >= 1")


@dataclass
class DimTable:
    """Graded dimensions keyed by grading tuples; absent key means zero.

    homfly-style tables are keyed (i, j, 2T); khovanov tables (h, q).
    """

    kind: str
    entries: dict
    cutoff: int

    def get(self, key) -> int:
        return self.entries.get(key, 0)

    def nonzero(self):
        return sorted(self.entries.items())

    def restrict_x(self, two_t_max: int) -> "DimTable":
        kept = {k: v for k, v in self.entries.items() if k[2] <= two_t_max}
        return DimTable(self.kind, kept, two_t_max)

    def __eq__(self, other):
        return (
            isinstance(other, DimTable)
            and self.kind == other.kind
            and self.entries == other.entries
        )

    def to_rows(self):
        if self.kind == "khovanov":
            return [
                {"h": h, "q": q, "dim": d}
                for (h, q), d in sorted(self.entries.items())
            ]
        return [
            {"i": i, "j": j, "x": x, "dim": d}
            for (i, j, x), d in sorted(self.entries.items())
        ]


@dataclass
class SliceData:
    basis: list  # (mask, mono)
    index: dict
    sq: Subquotient


def _spread(vec: int, positions: list) -> int:
    """Re-embed a sub-block vector into the full block coordinates."""
    acc = 0
    while vec:
        k = (vec & -vec).bit_length() - 1
        vec &= vec - 1
        acc |= 1 << positions[k]
    return acc


class Engine:
    """Graded homology engine for one assembled spec."""

    def __init__(self, spec: TripleComplexSpec, config: EngineConfig | None = None):
        self.spec = spec
        self.cfg = config or EngineConfig()
        self._gens: dict = {}
        self._layout: dict = {}  # (sigma, two_t) -> {i: [(mask, mono), ...]}
        self._stage1: dict = {}  # two_t -> {(sigma, i): SliceData}
        self._stage2: dict = {}  # two_t -> Stage2Data
        self._chi_ind: dict = {}
        self._dminus_ind: dict = {}
        self._lift_cache: dict = {}
        self._lock = threading.Lock()
        self._i_range = None

    # -- generators and slice bases ----------------------------------------

    def vertex_gens(self, sigma):
        if sigma not in self._gens:
            vm = self.spec.vertices[sigma]
            data = [
                (mask, vm.gen_h(mask), vm.gen_x(mask)) for mask in vm.gen_masks()
            ]
            self._gens[sigma] = data
        return self._gens[sigma]

    def i_range(self):
        """All horizontal degrees carrying generators, over all vertices."""
        if self._i_range is None:
            values = set()
            for sigma in self.spec.vertices:
                for _, h, _ in self.vertex_gens(sigma):
                    values.add(h)
            self._i_range = (min(values), max(values))
        return self._i_range

    def layout(self, sigma, two_t):
        key = (sigma, two_t)
        if key not in self._layout:
            vm = self.spec.vertices[sigma]
            per_i: dict = {}
            for mask, h, x in self.vertex_gens(sigma):
                mono_deg = two_t - x
                if mono_deg < 0 or mono_deg % 2:
                    continue
                monos = monomials_over(vm.survivors, self.spec.nvars, mono_deg)
                per_i.setdefault(h, []).extend((mask, m) for m in monos)
            self._layout[key] = per_i
        return self._layout[key]

    # -- stage one: homology along d_+ per vertex ---------------------------

    def _kept_b(self, sigma):
        vm = self.spec.vertices[sigma]
        return {row.rid: row.b for row in vm.kept if row.b}

    def _d_plus_matrix(self, sigma, source, target):
        index = {bm: k for k, bm in enumerate(target)}
        kept_b = self._kept_b(sigma)
        entries = []
        for col, (mask, mono) in enumerate(source):
            for rid, b in kept_b.items():
                bit = 1 << rid
                if not mask & bit:
                    continue
                for term in b.terms:
                    row = index.get((mask ^ bit, mono + term))
                    if row is not None:
                        entries.append((row, col))
        return F2Matrix.from_entries(len(target), len(source), entries)

    def _compute_stage1(self, two_t: int) -> dict:
        """Slice homology along d_+ per vertex and horizontal degree.

        The positive differential never touches rows with a zero b entry,
        so each block splits by the zero-row part of the generator mask
        into independent sub-blocks, which keeps the eliminations small.
        """
        out: dict = {}
        total = 0
        for sigma in sorted(self.spec.vertices):
            vm = self.spec.vertices[sigma]
            zero_bits = 0
            for row in vm.kept:
                if not row.b:
                    zero_bits |= 1 << row.rid
            per_i = self.layout(sigma, two_t)
            total += sum(len(b) for b in per_i.values())
            if total > self.cfg.max_slice_dim:
                raise ResourceLimitError(
                    f"slice 2T={two_t} exceeds max dimension {self.cfg.max_slice_dim}"
                )
            # partition each horizontal degree by the zero-row submask
            groups: dict = {}
            for i, basis in per_i.items():
                for k, (mask, mono) in enumerate(basis):
                    zkey = mask & zero_bits
                    groups.setdefault((i, zkey), ([], []))
                    groups[(i, zkey)][0].append(k)
                    groups[(i, zkey)][1].append((mask, mono))
            kernels: dict = {}
            images: dict = {}
            for (i, zkey), (positions, sub_basis) in groups.items():
                tgt = groups.get((i + 2, zkey))
                if tgt is None:
                    kernels.setdefault(i, []).extend(
                        1 << k for k in positions
                    )
                    continue
                mat = self._d_plus_matrix(sigma, sub_basis, tgt[1])
                if not any(mat.rows):
                    kernels.setdefault(i, []).extend(
                        1 << k for k in positions
                    )
                    continue
                _, kernel, image = rank_ker_im(mat)
                kernels.setdefault(i, []).extend(
                    _spread(vec, positions) for vec in kernel.rows
                )
                images.setdefault(i + 2, []).extend(
                    _spread(vec, tgt[0]) for vec in image.rows
                )
            for i, basis in per_i.items():
                sq = Subquotient(
                    len(basis), kernels.get(i, []), images.get(i, [])
                )
                index = {bm: k for k, bm in enumerate(basis)}
                out[(sigma, i)] = SliceData(basis, index, sq)
        return out

    def stage1(self, two_t: int) -> dict:
        with self._lock:
            if two_t in self._stage1:
                return self._stage1[two_t]
        data = self._load_cached(two_t)
        if data is None:
            data = self._compute_stage1(two_t)
            self._store_cached(two_t, data)
        with self._lock:
            self._stage1.setdefault(two_t, data)
            return self._stage1[two_t]

    def ensure_slices(self, degrees):
        missing = [t for t in degrees if t not in self._stage1]
        if not missing:
            return
        if self.cfg.parallel > 1 and len(missing) > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.parallel) as pool:
                list(pool.map(self.stage1, missing))
        else:
            for t in missing:
                self.stage1(t)

    # -- cache --------------------------------------------------------------

    def _cache_path(self, two_t):
        if not self.cfg.use_cache or not self.cfg.cache_dir:
            return None
        return os.path.join(
            self.cfg.cache_dir, f"{self.spec.spec_hash}_{two_t}.json"
        )

    def _load_cached(self, two_t):
        path = self._cache_path(two_t)
        if path is None or not os.path.exists(path):
            return None
        try:
            with open(path) as fh:
                blob = json.load(fh)
        except (OSError, json.JSONDecodeError):
            return None
        if blob.get("version") != 1 or blob.get("spec") != self.spec.spec_hash:
            return None
        out = {}
        for key, rec in blob["slices"].items():
            sigma_str, i_str = key.split("|")
            sigma = tuple(int(c) for c in sigma_str) if sigma_str else ()
            i = int(i_str)
            per_i = self.layout(sigma, two_t)
            basis = per_i.get(i, [])
            if len(basis) != rec["dim"]:
                return None
            sq = Subquotient.from_parts(
                rec["dim"],
                [int(h, 16) for h in rec["reps"]],
                [int(h, 16) for h in rec["bnd"]],
            )
            index = {bm: k for k, bm in enumerate(basis)}
            out[(sigma, i)] = SliceData(basis, index, sq)
        return out

    def _store_cached(self, two_t, data):
        path = self._cache_path(two_t)
        if path is None:
            return
        os.makedirs(self.cfg.cache_dir, exist_ok=True)
        blob = {
            "version": 1,
            "spec": self.spec.spec_hash,
            "x": two_t,
            "slices": {
                "".join(map(str, sigma)) + "|" + str(i): {
                    "dim": sd.sq.ambient_dim,
                    "reps": [format(r, "x") for r in sd.sq.reps],
                    "bnd": [
                        format(r, "x")
                        for r in (
                            sd.sq._reducer.pivots[p][0]
                            for p in sorted(sd.sq._reducer.pivots)
                            if sd.sq._reducer.pivots[p][1] == 0
                        )
                    ],
                }
                for (sigma, i), sd in data.items()
            },
        }
        tmp = tempfile.NamedTemporaryFile(
            "w", dir=self.cfg.cache_dir, delete=False, suffix=".tmp"
        )
        try:
            json.dump(blob, tmp)
            tmp.close()
            os.replace(tmp.name, path)
        except OSError:
            tmp.close()
            if os.path.exists(tmp.name):
                os.unlink(tmp.name)

    # -- induced maps on stage-one classes ----------------------------------

    def _to_symbolic(self, sd: SliceData, vector: int) -> dict:
        terms_by_mask: dict = {}
        v = vector
        while v:
            k = (v & -v).bit_length() - 1
            v &= v - 1
            mask, mono = sd.basis[k]
            terms_by_mask.setdefault(mask, set()).symmetric_difference_update(
                {mono}
            )
        return {
            mask: Poly(self.spec.nvars, terms)
            for mask, terms in terms_by_mask.items()
            if terms
        }

    def _from_symbolic(self, sd: SliceData, symb: dict) -> int:
        acc = 0
        for mask, poly in symb.items():
            for term in poly.terms:
                k = sd.index.get((mask, term))
                if k is None:
                    raise InvariantViolationError(
                        "image leaves the expected slice basis"
                    )
                acc ^= 1 << k
        return acc

    def _lifted_reps(self, sd: SliceData, sigma, i: int, two_t: int) -> list:
        """Full-coordinate cycle lifts of a slice's representatives, cached."""
        key = (sigma, i, two_t)
        cached = self._lift_cache.get(key)
        if cached is not None:
            return cached
        vm = self.spec.vertices[sigma]
        lifted = []
        for rep in sd.sq.reps:
            symb = self._to_symbolic(sd, rep)
            full = self.spec.lift(vm, symb)
            if self.cfg.check_sections:
                if any(self.spec.d_plus_full(vm, full).values()):
                    raise InvariantViolationError("section produced a non-cycle")
            lifted.append(full)
        self._lift_cache[key] = lifted
        return lifted

    def induced(self, phi, src_key, tgt_key) -> F2Matrix:
        """Matrix of a chain map on stage-one classes.

        ``phi(symbolic_vector) -> symbolic_vector`` acts in full coordinates;
        ``src_key``/``tgt_key`` are (sigma, i, 2T) triples.
        """
        s_sigma, s_i, s_t = src_key
        t_sigma, t_i, t_t = tgt_key
        src = self.stage1(s_t).get((s_sigma, s_i))
        tgt = self.stage1(t_t).get((t_sigma, t_i))
        tgt_vm = self.spec.vertices[t_sigma]
        if src is None or src.sq.dim == 0:
            dim_t = tgt.sq.dim if tgt is not None else 0
            dim_s = src.sq.dim if src is not None else 0
            return F2Matrix.zeros(dim_t, dim_s)
        cols = []
        for full in self._lifted_reps(src, s_sigma, s_i, s_t):
            image = phi(full)
            if tgt is None:
                if any(
                    p
                    for p in self.spec.project(tgt_vm, image).values()
                ):
                    raise InvariantViolationError("image lands outside the range")
                cols.append(0)
                continue
            reduced = self.spec.project(tgt_vm, image)
            vec = self._from_symbolic(tgt, reduced)
            cols.append(tgt.sq.reduce(vec))
        dim_t = tgt.sq.dim if tgt is not None else 0
        return F2Matrix.from_columns(cols, dim_t)

    def _reduced_induced(self, images, src_key, tgt_key) -> F2Matrix:
        """Induced matrix of a vertex-preserving map given on reduced masks.

        Such maps pick up no contraction corrections (nothing inside a
        vertex removes an excluded row), so they act directly on the reduced
        slice bases; ``images(mask)`` yields (target mask, coefficient).
        """
        s_sigma, s_i, s_t = src_key
        _, t_i, t_t = tgt_key
        src = self.stage1(s_t).get((s_sigma, s_i))
        tgt = self.stage1(t_t).get((s_sigma, t_i))
        dim_t = tgt.sq.dim if tgt is not None else 0
        if src is None or src.sq.dim == 0:
            dim_s = src.sq.dim if src is not None else 0
            return F2Matrix.zeros(dim_t, dim_s)
        image_cache: dict = {}
        cols = []
        for rep in src.sq.reps:
            acc = 0
            v = rep
            while v:
                k = (v & -v).bit_length() - 1
                v &= v - 1
                mask, mono = src.basis[k]
                hits = image_cache.get(mask)
                if hits is None:
                    hits = [
                        (tmask, poly.terms) for tmask, poly in images(mask) if poly
                    ]
                    image_cache[mask] = hits
                for tmask, terms in hits:
                    for term in terms:
                        if tgt is None:
                            raise InvariantViolationError(
                                "image lands outside the computed range"
                            )
                        idx = tgt.index.get((tmask, mono + term))
                        if idx is None:
                            raise InvariantViolationError(
                                "image leaves the expected slice basis"
                            )
                        acc ^= 1 << idx
            cols.append(tgt.sq.reduce(acc) if tgt is not None else 0)
        return F2Matrix.from_columns(cols, dim_t)

    def chi_induced(self, cidx: int, sigma, i: int, two_t: int) -> F2Matrix:
        key = (cidx, sigma, i, two_t)
        if key not in self._chi_ind:
            tgt_sigma = sigma[:cidx] + (1,) + sigma[cidx + 1 :]
            self._chi_ind[key] = self.induced(
                lambda w: self.spec.chi_full(cidx, w),
                (sigma, i, two_t),
                (tgt_sigma, i, two_t),
            )
        return self._chi_ind[key]

    def dminus_induced(self, sigma, i: int, two_t: int) -> F2Matrix:
        key = (sigma, i, two_t)
        if key not in self._dminus_ind:
            vm = self.spec.vertices[sigma]
            kept = [(1 << row.rid, row.a) for row in vm.kept if row.a]

            def images(mask):
                for bit, a in kept:
                    if not mask & bit:
                        yield mask | bit, a

            self._dminus_ind[key] = self._reduced_induced(
                images, (sigma, i, two_t), (sigma, i - 2, two_t + 6)
            )
        return self._dminus_ind[key]

    def mult_induced(self, var: int, sigma, i: int, two_t: int) -> F2Matrix:
        vm = self.spec.vertices[sigma]
        form = Poly.variable(self.spec.nvars, var)
        form = form.substitute(self.spec.arc_subs).substitute(vm.subs_final)

        def images(mask):
            yield mask, form

        return self._reduced_induced(
            images, (sigma, i, two_t), (sigma, i, two_t + 2)
        )

    def homotopy_induced(self, rid: int, sigma, i: int, two_t: int) -> F2Matrix:
        bit = 1 << rid
        one = Poly.one(self.spec.nvars)

        def images(mask):
            if mask & bit:
                yield mask ^ bit, one

        return self._reduced_induced(
            images, (sigma, i, two_t), (sigma, i + 2, two_t - 2)
        )

    # -- stage two: homology of the induced vertical differential -----------

    def stage2(self, two_t: int) -> "Stage2Data":
        if two_t in self._stage2:
            return self._stage2[two_t]
        s1 = self.stage1(two_t)
        spaces: dict = {}
        for (sigma, i), sd in sorted(s1.items()):
            if sd.sq.dim == 0:
                continue
            v = self.spec.vertices[sigma].v
            spaces.setdefault((i, v), []).append((sigma, sd.sq.dim))
        offsets: dict = {}
        dims: dict = {}
        for key, parts in spaces.items():
            off = {}
            total = 0
            for sigma, dim in parts:
                off[sigma] = total
                total += dim
            offsets[key] = off
            dims[key] = total

        matrices: dict = {}
        for (i, v), off in offsets.items():
            tgt_key = (i, v + 2)
            tgt_dim = dims.get(tgt_key, 0)
            tgt_off = offsets.get(tgt_key, {})
            cols = [0] * dims[(i, v)]
            for sigma, base in off.items():
                src_dim = s1[(sigma, i)].sq.dim
                for cidx in range(len(self.spec.crossings)):
                    if sigma[cidx] != 0:
                        continue
                    tgt_sigma = sigma[:cidx] + (1,) + sigma[cidx + 1 :]
                    block = self.chi_induced(cidx, sigma, i, two_t)
                    if tgt_sigma not in tgt_off:
                        if not block.is_zero():
                            raise InvariantViolationError(
                                "vertical image missed the assembled space"
                            )
                        continue
                    tbase = tgt_off[tgt_sigma]
                    for c, col in enumerate(block.columns()):
                        cols[base + c] ^= col << tbase
            matrices[(i, v)] = F2Matrix.from_columns(cols, tgt_dim)

        homology: dict = {}
        for (i, v), dim in dims.items():
            out_mat = matrices.get((i, v), F2Matrix.zeros(0, dim))
            _, kernel, _ = rank_ker_im(out_mat)
            cycles = list(kernel.rows)
            inc = matrices.get((i, v - 2))
            boundaries = list(rank_ker_im(inc)[2].rows) if inc is not None else []
            homology[(i, v)] = Subquotient(dim, cycles, boundaries)

        data = Stage2Data(two_t, offsets, dims, homology)
        self._stage2[two_t] = data
        return data

    # -- stage-two level chain maps (matrix algebra over stage-one blocks) --

    def _stage2_map(self, two_t, phi_block, i_shift, t_shift) -> dict:
        """Assemble a vertex-preserving induced map on stage-two classes.

        ``phi_block(sigma, i, two_t)`` returns the stage-one induced block;
        the map sends (i, v, 2T) to (i + i_shift, v, 2T + t_shift).
        """
        src = self.stage2(two_t)
        tgt = self.stage2(two_t + t_shift)
        out = {}
        col_cache: dict = {}
        for (i, v), sq in src.homology.items():
            tkey = (i + i_shift, v)
            tsq = tgt.homology.get(tkey)
            cols = []
            for rep in sq.reps:
                image_vec = 0
                vv = rep
                while vv:
                    k = (vv & -vv).bit_length() - 1
                    vv &= vv - 1
                    sigma, local = src.locate((i, v), k)
                    block_cols = col_cache.get((sigma, i))
                    if block_cols is None:
                        block_cols = phi_block(sigma, i, two_t).columns()
                        col_cache[(sigma, i)] = block_cols
                    col = block_cols[local]
                    if col and tsq is None:
                        raise InvariantViolationError(
                            "induced image missed the assembled space"
                        )
                    if tsq is not None and col:
                        tbase = tgt.offsets[tkey].get(sigma)
                        if tbase is None:
                            raise InvariantViolationError(
                                "induced image missed the vertex block"
                            )
                        image_vec ^= col << tbase
                if tsq is None:
                    if image_vec:
                        raise InvariantViolationError("image outside range")
                    cols.append(0)
                else:
                    cols.append(tsq.reduce(image_vec))
            out[(i, v)] = F2Matrix.from_columns(
                cols, tsq.dim if tsq is not None else 0
            )
        return out

    def dminus_stage2(self, two_t: int) -> dict:
        """Induced negative differential on stage-two classes, per (i, v)."""
        # the stage-one block sends (sigma, i, 2T) to (sigma, i-2, 2T+6)
        return self._stage2_map(
            two_t, lambda sigma, i, t: self.dminus_induced(sigma, i, t), -2, 6
        )

    def mult_stage2(self, var: int, two_t: int) -> dict:
        return self._stage2_map(
            two_t, lambda sigma, i, t: self.mult_induced(var, sigma, i, t), 0, 2
        )

    def homotopy_stage2(self, rid: int, two_t: int) -> dict:
        return self._stage2_map(
            two_t,
            lambda sigma, i, t: self.homotopy_induced(rid, sigma, i, t),
            2,
            -2,
        )


@dataclass
class Stage2Data:
    two_t: int
    offsets: dict  # (i, v) -> {sigma: offset}
    dims: dict
    homology: dict  # (i, v) -> Subquotient over stage-one classes

    def locate(self, key, coord: int):
        """Vertex block and local index of a stage-one class coordinate."""
        best = None
        for sigma, off in self.offsets[key].items():
            if off <= coord and (best is None or off > best[1]):
                best = (sigma, off)
        return best[0], coord - best[1]

    def dim_table(self) -> dict:
        return {
            (i, v): sq.dim for (i, v), sq in self.homology.items() if sq.dim
        }


# ---------------------------------------------------------------------------
# Public table operations
# ---------------------------------------------------------------------------


def engine_for(
    word: BraidWord,
    config: EngineConfig | None = None,
    *,
    reserved_component: int | None = None,
    chi_solution: int = 0,
) -> Engine:
    diagram = build_marked_diagram(word)
    spec = assemble(
        diagram,
        reserved_component=reserved_component,
        chi_solution=chi_solution,
    )
    return Engine(spec, config)


def homfly_table(
    word: BraidWord,
    cutoff: int,
    config: EngineConfig | None = None,
    engine: Engine | None = None,
) -> tuple[DimTable, DimTable]:
    """Normalized and unnormalized triply graded dimension tables, 2T <= 2*cutoff."""
    if cutoff < 0:
        raise UsageError("cutoff must be nonnegative")
    eng = engine or engine_for(word, config)
    degrees = list(range(eng.spec.x_min, 2 * cutoff + 1, 2))
    eng.ensure_slices(degrees)
    entries: dict = {}
    for two_t in degrees:
        for (i, v), dim in eng.stage2(two_t).dim_table().items():
            entries[(i, v, two_t)] = dim
    dh = eng.spec.h_shift
    dv = eng.spec.v_shift
    hat_entries = {
        (i - dh, j - dv, x): dim for (i, j, x), dim in entries.items()
    }
    return (
        DimTable("homfly", entries, 2 * cutoff),
        DimTable("hat_homfly", hat_entries, 2 * cutoff),
    )


def _e2_data(engine: Engine, cutoff: int):
    """Second-page subquotients per (i, j, 2T) for 2T <= 2*cutoff."""
    degrees = list(range(engine.spec.x_min, 2 * cutoff + 7, 2))
    engine.ensure_slices(degrees)
    sound = list(range(engine.spec.x_min, 2 * cutoff + 1, 2))
    dmaps: dict = {}
    for two_t in sound:
        dmaps[two_t] = engine.dminus_stage2(two_t)
    pages: dict = {}
    for two_t in sound:
        st2 = engine.stage2(two_t)
        for (i, v), sq in st2.homology.items():
            if sq.dim == 0:
                continue
            out = dmaps[two_t].get((i, v), F2Matrix.zeros(0, sq.dim))
            inc = dmaps.get(two_t - 6, {}).get((i + 2, v))
            _, kernel, _ = rank_ker_im(out)
            cycles = list(kernel.rows)
            boundaries = list(rank_ker_im(inc)[2].rows) if inc is not None else []
            pages[(i, v, two_t)] = Subquotient(sq.dim, cycles, boundaries)
    return pages


def e2_table(
    word: BraidWord,
    cutoff: int,
    config: EngineConfig | None = None,
    engine: Engine | None = None,
) -> DimTable:
    """Dimensions of the second page of the spectral sequence, 2T <= 2*cutoff.

    Internally extends the slice range by the headroom the negative
    differential needs, so every reported entry is sound.
    """
    if cutoff < 0:
        raise UsageError("cutoff must be nonnegative")
    eng = engine or engine_for(word, config)
    pages = _e2_data(eng, cutoff)
    entries = {key: sq.dim for key, sq in pages.items() if sq.dim}
    return DimTable("e2", entries, 2 * cutoff)


def khovanov_table(
    word: BraidWord,
    cutoff: int,
    config: EngineConfig | None = None,
    engine: Engine | None = None,
) -> DimTable:
    """Khovanov homology dims keyed (h, q), from the induced double complex.

    Per quantum degree q the stage-one classes with 2T + 3i = q form a
    finite complex in which the sum of the induced vertical and negative
    differentials moves the half-difference of the gradings by one; its
    homology gives the table.  The homological grading is calibrated as
    h = (i - j)/2, which puts unlinks at h = 0 and the positive trefoil in
    h ∈ {0, 2, 3} with graded Euler characteristic the Jones polynomial.
    The top of the soundly computed q-range must be empty (the fringe
    check), otherwise a larger cutoff is demanded.
    """
    if cutoff < 0:
        raise UsageError("cutoff must be nonnegative")
    eng = engine or engine_for(word, config)
    two_t_max = 2 * cutoff
    degrees = list(range(eng.spec.x_min, two_t_max + 1, 2))
    eng.ensure_slices(degrees)
    i_min, i_max = eng.i_range()
    q_max_sound = two_t_max + 3 * i_min

    # collect nonzero stage-one blocks per quantum degree
    blocks: dict = {}
    for two_t in degrees:
        for (sigma, i), sd in eng.stage1(two_t).items():
            if sd.sq.dim == 0:
                continue
            q = two_t + 3 * i
            if q > q_max_sound:
                continue
            v = eng.spec.vertices[sigma].v
            t_deg = (v - i) // 2
            blocks.setdefault(q, {}).setdefault(t_deg, []).append(
                (sigma, i, two_t, sd.sq.dim)
            )

    entries: dict = {}
    support_q = set()
    for q, per_t in sorted(blocks.items()):
        offsets: dict = {}
        dims: dict = {}
        for t_deg, items in per_t.items():
            off = {}
            total = 0
            for sigma, i, two_t, dim in items:
                off[(sigma, i, two_t)] = total
                total += dim
            offsets[t_deg] = off
            dims[t_deg] = total
        mats: dict = {}
        for t_deg, off in offsets.items():
            tgt_off = offsets.get(t_deg + 1, {})
            tgt_dim = dims.get(t_deg + 1, 0)
            cols = [0] * dims[t_deg]
            for (sigma, i, two_t), base in off.items():
                src_dim = eng.stage1(two_t)[(sigma, i)].sq.dim
                # vertical part
                for cidx in range(len(eng.spec.crossings)):
                    if sigma[cidx] != 0:
                        continue
                    tgt_sigma = sigma[:cidx] + (1,) + sigma[cidx + 1 :]
                    block = eng.chi_induced(cidx, sigma, i, two_t)
                    tbase = tgt_off.get((tgt_sigma, i, two_t))
                    if tbase is None:
                        if not block.is_zero():
                            raise InvariantViolationError(
                                "vertical image missed the quantum block"
                            )
                        continue
                    for c, col in enumerate(block.columns()):
                        cols[base + c] ^= col << tbase
                # negative part
                block = eng.dminus_induced(sigma, i, two_t)
                tbase = tgt_off.get((sigma, i - 2, two_t + 6))
                if tbase is None:
                    if not block.is_zero():
                        raise InvariantViolationError(
                            "negative image missed the quantum block"
                        )
                    continue
                for c, col in enumerate(block.columns()):
                    cols[base + c] ^= col << tbase
            mats[t_deg] = F2Matrix.from_columns(cols, tgt_dim)
        for t_deg, dim in dims.items():
            out = mats.get(t_deg, F2Matrix.zeros(0, dim))
            _, kernel, _ = rank_ker_im(out)
            cycles = list(kernel.rows)
            inc = mats.get(t_deg - 1)
            boundaries = list(rank_ker_im(inc)[2].rows) if inc is not None else []
            sq = Subquotient(dim, cycles, boundaries)
            if sq.dim:
                entries[(-t_deg, q)] = sq.dim
                support_q.add(q)

    # fringe validation: the top of the sound window must be empty (two
    # quantum steps of the support parity)
    if support_q:
        fringe = set(range(q_max_sound - 3, q_max_sound + 1))
        if support_q & fringe:
            raise ResourceLimitError(
                "Khovanov support reaches the sound cutoff fringe;"
                " demand a larger cutoff"
            )
    return DimTable("khovanov", entries, q_max_sound)


@dataclass
class HomotopyReport:
    component: int
    variable: int
    cutoff: int
    ok: bool
    first_failure: tuple | None
    slices_checked: int


def verify_homotopy_identity(
    word: BraidWord,
    component: int,
    cutoff: int,
    config: EngineConfig | None = None,
) -> HomotopyReport:
    """Check the homotopy identity on first-page slices up to 2T = 2*cutoff.

    Verifies, as matrices on the triply graded homology, that the
    anticommutator of the induced negative differential with the component's
    contraction homotopy equals the square of multiplication by the
    component's variable.  Failures are reported, not raised.
    """
    diagram = build_marked_diagram(word)
    base = assemble(diagram)
    hd = homotopy_h(base, component)
    eng = Engine(hd.spec, config)
    degrees = list(range(hd.spec.x_min - 2, 2 * cutoff + 7, 2))
    eng.ensure_slices(degrees)

    var = hd.variable
    rid = hd.rid
    first_failure = None
    checked = 0
    for two_t in range(hd.spec.x_min, 2 * cutoff + 1, 2):
        h_at = eng.homotopy_stage2(rid, two_t)
        d_at = eng.dminus_stage2(two_t)
        x_at = eng.mult_stage2(var, two_t)
        st2 = eng.stage2(two_t)
        for (i, v), sq in st2.homology.items():
            if sq.dim == 0:
                continue
            checked += 1
            h1 = h_at[(i, v)]
            d_after_h = eng.dminus_stage2(two_t - 2).get(
                (i + 2, v), F2Matrix.zeros(0, h1.nrows)
            )
            d0 = d_at[(i, v)]
            h_after_d = eng.homotopy_stage2(rid, two_t + 6).get(
                (i - 2, v), F2Matrix.zeros(0, d0.nrows)
            )
            x0 = x_at[(i, v)]
            x_after = eng.mult_stage2(var, two_t + 2).get(
                (i, v), F2Matrix.zeros(0, x0.nrows)
            )
            lhs = _padded_sum(d_after_h, h1, h_after_d, d0)
            rhs = x_after @ x0 if x_after.ncols == x0.nrows else F2Matrix.zeros(0, x0.ncols)
            if not _equal_padded(lhs, rhs):
                if first_failure is None:
                    first_failure = (i, v, two_t)
    return HomotopyReport(
        component=component,
        variable=var,
        cutoff=cutoff,
        ok=first_failure is None,
        first_failure=first_failure,
        slices_checked=checked,
    )


def _padded_sum(a2: F2Matrix, a1: F2Matrix, b2: F2Matrix, b1: F2Matrix) -> F2Matrix:
    """a2 @ a1 + b2 @ b1 with empty factors padded to compatible shapes."""
    left = a2 @ a1 if a2.ncols == a1.nrows else F2Matrix.zeros(a2.nrows, a1.ncols)
    right = b2 @ b1 if b2.ncols == b1.nrows else F2Matrix.zeros(b2.nrows, b1.ncols)
    rows = max(left.nrows, right.nrows)
    cols = max(left.ncols, right.ncols)
    out = F2Matrix.zeros(rows, cols)
    for r in range(left.nrows):
        out.rows[r] ^= left.rows[r]
    for r in range(right.nrows):
        out.rows[r] ^= right.rows[r]
    return out


def _equal_padded(a: F2Matrix, b: F2Matrix) -> bool:
    """Equality with missing rows treated as zero (maps into a common space)."""
    rows = max(a.nrows, b.nrows)
    for r in range(rows):
        ra = a.rows[r] if r < a.nrows else 0
        rb = b.rows[r] if r < b.nrows else 0
        if ra != rb:
            return False
    return True


def induced_action(
    engine: Engine, variable: int, two_t: int
) -> dict:
    """Matrices of multiplication by a variable on the triply graded classes.

    Maps the (i, j) classes at x-degree 2T to those at 2T + 2.
    """
    return engine.mult_stage2(variable, two_t)


def e2_induced_action(engine: Engine, variable: int, cutoff: int) -> dict:
    """Multiplication matrices induced on the second page, per (i, j, 2T)."""
    pages = _e2_data(engine, cutoff + 1)
    out = {}
    for (i, v, two_t), sq in pages.items():
        if two_t > 2 * cutoff:
            continue
        tgt = pages.get((i, v, two_t + 2))
        mult = engine.mult_stage2(variable, two_t).get((i, v))
        if mult is None:
            continue
        cols = []
        for rep in sq.reps:
            st2 = engine.stage2(two_t)
            image = 0
            vv = rep
            while vv:
                k = (vv & -vv).bit_length() - 1
                vv &= vv - 1
                image ^= mult.column(k)
            if tgt is None:
                if image:
                    # multiplication must send page classes into the page
                    raise InvariantViolationError("page action left the page")
                cols.append(0)
            else:
                cols.append(tgt.reduce(image))
        out[(i, v, two_t)] = F2Matrix.from_columns(
            cols, tgt.dim if tgt is not None else 0
        )
    return out


@dataclass
class MarkovReport:
    word: str
    cutoff: int
    ok: bool
    failures: list


def markov_invariance_report(
    word: BraidWord, cutoff: int, config: EngineConfig | None = None
) -> MarkovReport:
    """Compare normalized tables of a word against all its Markov variants."""
    from .braid import markov_variants

    base, _ = homfly_table(word, cutoff, config)
    failures = []
    for variant in markov_variants(word):
        table, _ = homfly_table(variant, cutoff, config)
        if table.entries != base.entries:
            failures.append(variant.text())
    return MarkovReport(word.text(), cutoff, not failures, failures)
