"""Finitely presented graded modules over the mod-2 Steenrod algebra.

A CompiledModule is a per-degree F2 basis with an action hook that
produces the matrix row of any Milnor monomial on any basis element.
Constructions (quotients of free modules, suspension, truncation,
tensor with diagonal action, kernels, images, cokernels, direct sums)
all yield CompiledModules, so they compose freely.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import milnor
from .milnor import Element, Monomial, multiply_mono
from .linalg import Elimination, Solver, lowest_bit


class ModuleError(ValueError):
    pass


def _reduce_full(elim: Elimination, v: int) -> int:
    """Canonical residue of v modulo the row space: no pivot bits remain."""
    out = 0
    while v:
        c = lowest_bit(v)
        if c in elim.pivot_row:
            v ^= elim.pivot_row[c]
        else:
            out |= 1 << c
            v ^= 1 << c
    return out


class CompiledModule:
    """A graded F2 vector space with an A-action, compiled through a cap.

    `act_basis_fn(mono, t, idx)` returns the action of a Milnor monomial on
    the idx-th basis element of degree t, as a bitmask over the basis in
    degree t + deg(mono).  Degrees above the cap are treated as zero.
    """

    def __init__(self, name, dims, names, act_basis_fn, cap, gens=None):
        self.name = name
        self._dims = {t: d for t, d in dims.items() if d > 0}
        self._names = names
        self._act_basis_fn = act_basis_fn
        self.cap = cap
        self.gens: dict[str, tuple[int, int]] = gens or {}
        self._cache: dict[tuple[Monomial, int, int], int] = {}

    def dim(self, t: int) -> int:
        return self._dims.get(t, 0)

    def degrees(self) -> list[int]:
        return sorted(self._dims)

    def total_dim(self) -> int:
        return sum(self._dims.values())

    def top_degree(self) -> int:
        return max(self._dims) if self._dims else 0

    def basis_names(self, t: int) -> list[str]:
        return self._names.get(t, [])

    def act_basis(self, mono: Monomial, t: int, idx: int) -> int:
        if not mono:
            return 1 << idx
        target = t + milnor.degree(mono)
        if target > self.cap or self.dim(target) == 0:
            return 0
        key = (mono, t, idx)
        got = self._cache.get(key)
        if got is None:
            got = self._act_basis_fn(mono, t, idx)
            self._cache[key] = got
        return got

    def act_vec(self, mono: Monomial, t: int, vec: int) -> int:
        acc = 0
        while vec:
            i = lowest_bit(vec)
            acc ^= self.act_basis(mono, t, i)
            vec &= vec - 1
        return acc

    def act_element(self, terms, t: int, vec: int) -> int:
        acc = 0
        for mono in terms:
            acc ^= self.act_vec(mono, t, vec)
        return acc

    def act_word(self, word: list[Monomial], t: int, vec: int) -> tuple[int, int]:
        """Apply a product of monomials (leftmost acts last); returns (deg, vec)."""
        for mono in reversed(word):
            vec = self.act_vec(mono, t, vec)
            t += milnor.degree(mono)
        return t, vec

    def action_matrix(self, mono: Monomial, t: int) -> list[int]:
        return [self.act_basis(mono, t, i) for i in range(self.dim(t))]

    def vector_str(self, t: int, vec: int) -> str:
        names = self.basis_names(t)
        parts = [names[i] for i in range(self.dim(t)) if (vec >> i) & 1]
        return " + ".join(parts) if parts else "0"

    def __repr__(self) -> str:
        return f"<module {self.name}: dim {self.total_dim()} through degree {self.cap}>"


@dataclass(frozen=True)
class Presentation:
    """Generators, homogeneous relations, and an optional truncation window."""

    name: str
    generators: tuple[tuple[str, int], ...]
    relations: tuple[tuple[tuple[Element, int], ...], ...] = ()
    window: tuple[int, int] | None = None

    def gen_degree(self, idx: int) -> int:
        return self.generators[idx][1]

    def doubled(self, name: str | None = None) -> "Presentation":
        """Entrywise-double every relation coefficient and double all degrees."""
        gens = tuple((g, 2 * d) for g, d in self.generators)
        rels = tuple(
            tuple((milnor.double(el), gi) for el, gi in rel) for rel in self.relations
        )
        window = (2 * self.window[0], 2 * self.window[1]) if self.window else None
        return Presentation(name or (self.name + "_dbl"), gens, rels, window)


class _CompiledPresentation:
    """Free-module bases, relation reductions, and the induced action."""

    def __init__(self, pres: Presentation, cap: int):
        self.pres = pres
        self.cap = cap
        lo, hi = pres.window if pres.window else (0, cap)
        if lo > hi:
            raise ModuleError(f"empty truncation window [{lo}, {hi}]")
        self.free_labels: dict[int, list[tuple[int, Monomial]]] = {}
        self.free_index: dict[int, dict[tuple[int, Monomial], int]] = {}
        for t in range(0, cap + 1):
            labels = []
            for gi, (_, gdeg) in enumerate(pres.generators):
                if gdeg <= t:
                    labels.extend((gi, m) for m in milnor.basis(t - gdeg))
            self.free_labels[t] = labels
            self.free_index[t] = {lab: i for i, lab in enumerate(labels)}

        self.rel_elim: dict[int, Elimination] = {t: Elimination() for t in range(cap + 1)}
        for rel in pres.relations:
            degs = {el.degree + pres.gen_degree(gi) for el, gi in rel if not el.is_zero()}
            if len(degs) != 1:
                raise ModuleError(f"inhomogeneous relation in {pres.name}: degrees {sorted(degs)}")
            rdeg = degs.pop()
            for t in range(rdeg, cap + 1):
                for a in milnor.basis(t - rdeg):
                    row = 0
                    for el, gi in rel:
                        for c in el.terms:
                            for m in multiply_mono(a, c):
                                row ^= 1 << self.free_index[t][(gi, m)]
                    self.rel_elim[t].add(row)

        self.quotient_labels: dict[int, list[tuple[int, Monomial]]] = {}
        self.coord_of_bit: dict[int, dict[int, int]] = {}
        for t in range(cap + 1):
            if t < lo or t > hi:
                self.quotient_labels[t] = []
                self.coord_of_bit[t] = {}
                continue
            pivots = self.rel_elim[t].pivot_row
            labels = [
                lab for i, lab in enumerate(self.free_labels[t]) if i not in pivots
            ]
            self.quotient_labels[t] = labels
            self.coord_of_bit[t] = {
                i: j
                for j, i in enumerate(
                    i for i in range(len(self.free_labels[t])) if i not in pivots
                )
            }

        self.lo, self.hi = lo, hi

    def project(self, t: int, free_vec: int) -> int:
        if t < self.lo or t > self.hi or t > self.cap:
            return 0
        residual = _reduce_full(self.rel_elim[t], free_vec)
        out = 0
        coords = self.coord_of_bit[t]
        while residual:
            b = lowest_bit(residual)
            out |= 1 << coords[b]
            residual &= residual - 1
        return out

    def act_basis(self, mono: Monomial, t: int, idx: int) -> int:
        gi, b = self.quotient_labels[t][idx]
        target = t + milnor.degree(mono)
        free = 0
        index = self.free_index[target]
        for m in multiply_mono(mono, b):
            free ^= 1 << index[(gi, m)]
        return self.project(target, free)


def _label_name(pres: Presentation, label: tuple[int, Monomial]) -> str:
    gi, m = label
    gname = pres.generators[gi][0]
    if not m:
        return gname
    return f"{milnor.mono_str(m)} {gname}"


def compile_presentation(pres: Presentation, cap: int) -> CompiledModule:
    """Compile bases and action tables through the cap.

    Basis order in each degree: generator index ascending, then acting
    monomial descending in the fixed per-degree monomial order.
    """
    for _, gdeg in pres.generators:
        if cap < gdeg:
            raise ModuleError(f"cap {cap} below generator degree {gdeg}")
    comp = _CompiledPresentation(pres, cap)
    dims = {t: len(labels) for t, labels in comp.quotient_labels.items()}
    names = {
        t: [_label_name(pres, lab) for lab in labels]
        for t, labels in comp.quotient_labels.items()
        if labels
    }
    gens = {}
    for gi, (gname, gdeg) in enumerate(pres.generators):
        vec = comp.project(gdeg, 1 << comp.free_index[gdeg][(gi, milnor.SQ0)])
        gens[gname] = (gdeg, vec)
    mod = CompiledModule(pres.name, dims, names, comp.act_basis, cap, gens)
    mod.presentation = pres
    mod.compiled = comp
    return mod


def free_module(name: str, generators: list[tuple[str, int]], cap: int) -> CompiledModule:
    return compile_presentation(Presentation(name, tuple(generators)), cap)


def sigma_f2(t: int, gen_name: str = "k", cap: int | None = None) -> CompiledModule:
    """The suspension of F2: one class, sitting in degree t."""
    return compile_presentation(
        Presentation(f"S{t}F2", ((gen_name, t),), (), (t, t)), cap if cap is not None else t
    )


def suspend(mod: CompiledModule, k: int) -> CompiledModule:
    if k == 0:
        return mod
    dims = {t + k: mod.dim(t) for t in mod.degrees()}
    names = {t + k: mod.basis_names(t) for t in mod.degrees()}
    gens = {g: (d + k, v) for g, (d, v) in mod.gens.items()}
    return CompiledModule(
        f"S{k}({mod.name})",
        dims,
        names,
        lambda mono, t, idx: mod.act_basis(mono, t - k, idx),
        mod.cap + k,
        gens,
    )


def truncate(mod: CompiledModule, lo: int, hi: int) -> CompiledModule:
    """Quotient by all classes outside [lo, hi]."""
    if lo > hi:
        raise ModuleError(f"empty truncation window [{lo}, {hi}]")
    keep = [t for t in mod.degrees() if lo <= t <= hi]
    dims = {t: mod.dim(t) for t in keep}
    names = {t: mod.basis_names(t) for t in keep}

    def act(mono, t, idx):
        target = t + milnor.degree(mono)
        if target < lo or target > hi:
            return 0
        return mod.act_basis(mono, t, idx)

    gens = {g: (d, v) for g, (d, v) in mod.gens.items() if lo <= d <= hi}
    return CompiledModule(f"{mod.name}[{lo},{hi}]", dims, names, act, min(mod.cap, hi), gens)


class TensorModule(CompiledModule):
    """Tensor product with the diagonal action through the coproduct."""

    def __init__(self, a: CompiledModule, b: CompiledModule, cap: int | None = None):
        self.a, self.b = a, b
        cap = min(a.cap + b.cap, cap if cap is not None else a.cap + b.cap)
        pairs: dict[int, list[tuple[int, int, int]]] = {}
        index: dict[int, dict[tuple[int, int, int], int]] = {}
        for t in range(cap + 1):
            lst = []
            for da in a.degrees():
                db = t - da
                if b.dim(db) == 0:
                    continue
                for ia in range(a.dim(da)):
                    for ib in range(b.dim(db)):
                        lst.append((da, ia, ib))
            pairs[t] = lst
            index[t] = {p: i for i, p in enumerate(lst)}
        self.pairs, self.pair_index = pairs, index
        dims = {t: len(lst) for t, lst in pairs.items()}
        names = {
            t: [
                f"{a.basis_names(da)[ia]} (x) {b.basis_names(t - da)[ib]}"
                for da, ia, ib in lst
            ]
            for t, lst in pairs.items()
            if lst
        }
        super().__init__(f"{a.name}(x){b.name}", dims, names, self._act, cap)

    def _act(self, mono: Monomial, t: int, idx: int) -> int:
        da, ia, ib = self.pairs[t][idx]
        db = t - da
        target = t + milnor.degree(mono)
        out = 0
        index = self.pair_index[target]
        for u, v in milnor.coproduct(mono):
            xa = self.a.act_basis(u, da, ia)
            if not xa:
                continue
            xb = self.b.act_basis(v, db, ib)
            if not xb:
                continue
            ta = da + milnor.degree(u)
            wa = xa
            while wa:
                ja = lowest_bit(wa)
                wb = xb
                while wb:
                    jb = lowest_bit(wb)
                    out ^= 1 << index[(ta, ja, jb)]
                    wb &= wb - 1
                wa &= wa - 1
    # fall through returns accumulated bits
        return out

    def pair_vector(self, da: int, va: int, db: int, vb: int) -> int:
        """Tensor of a degree-da vector in a with a degree-db vector in b."""
        out = 0
        index = self.pair_index[da + db]
        wa = va
        while wa:
            ia = lowest_bit(wa)
            wb = vb
            while wb:
                ib = lowest_bit(wb)
                out ^= 1 << index[(da, ia, ib)]
                wb &= wb - 1
            wa &= wa - 1
        return out


def tensor(a: CompiledModule, b: CompiledModule, cap: int | None = None) -> TensorModule:
    return TensorModule(a, b, cap)


def tensor_swap(t_ab: TensorModule, t_ba: TensorModule) -> "ModuleMap":
    """The transposition tau: a(x)b -> b(x)a."""
    mats = {}
    for t in t_ab.degrees():
        rows = []
        for da, ia, ib in t_ab.pairs[t]:
            rows.append(1 << t_ba.pair_index[t][(t - da, ib, ia)])
        mats[t] = rows
    return ModuleMap(t_ab, t_ba, mats)


@dataclass
class ModuleMap:
    """A degreewise F2-linear map intended to commute with the A-action."""

    source: CompiledModule
    target: CompiledModule
    mats: dict[int, list[int]]

    def row(self, t: int, idx: int) -> int:
        rows = self.mats.get(t)
        return rows[idx] if rows else 0

    def apply(self, t: int, vec: int) -> int:
        rows = self.mats.get(t)
        acc = 0
        while vec:
            i = lowest_bit(vec)
            if rows:
                acc ^= rows[i]
            vec &= vec - 1
        return acc

    def then(self, other: "ModuleMap") -> "ModuleMap":
        mats = {}
        for t, rows in self.mats.items():
            mats[t] = [other.apply(t, r) for r in rows]
        return ModuleMap(self.source, other.target, mats)

    def is_zero(self) -> bool:
        return all(all(r == 0 for r in rows) for rows in self.mats.values())

    def commutes_with_action(self, monos: list[Monomial] | None = None) -> bool:
        """Check f(m.x) == m.f(x) for the given monomials (default: Sq(2^k))."""
        if monos is None:
            monos = [(1 << k,) for k in range(0, 7) if (1 << k) <= self.source.cap]
        for mono in monos:
            d = milnor.degree(mono)
            for t in self.source.degrees():
                for i in range(self.source.dim(t)):
                    lhs = self.apply(t + d, self.source.act_basis(mono, t, i))
                    rhs = self.target.act_vec(mono, t, self.row(t, i))
                    if lhs != rhs:
                        return False
        return True

    @staticmethod
    def from_gen_images(
        source: CompiledModule, target: CompiledModule, images: dict[str, tuple[int, int]]
    ) -> "ModuleMap":
        """A-linear map on a presented source, given images of its generators."""
        comp = source.compiled
        pres = source.presentation
        mats = {}
        for t in source.degrees():
            rows = []
            for gi, mono in comp.quotient_labels[t]:
                gname = pres.generators[gi][0]
                gdeg, gvec = images[gname]
                rows.append(target.act_vec(mono, gdeg, gvec))
            mats[t] = rows
        return ModuleMap(source, target, mats)

    @staticmethod
    def zero(source: CompiledModule, target: CompiledModule) -> "ModuleMap":
        return ModuleMap(source, target, {t: [0] * source.dim(t) for t in source.degrees()})

    @staticmethod
    def identity(mod: CompiledModule) -> "ModuleMap":
        return ModuleMap(mod, mod, {t: [1 << i for i in range(mod.dim(t))] for t in mod.degrees()})


class _SolvedSubspace:
    """Per-degree spans with back-solving, for kernel and image modules."""

    def __init__(self, vectors: dict[int, list[int]]):
        self.vectors = vectors
        self.solvers: dict[int, Solver] = {}

    def solver(self, t: int) -> Solver:
        if t not in self.solvers:
            self.solvers[t] = Solver(self.vectors.get(t, []))
        return self.solvers[t]

    def coords(self, t: int, ambient_vec: int) -> int:
        if ambient_vec == 0:
            return 0
        x = self.solver(t).solve(ambient_vec)
        if x is None:
            raise ModuleError("vector escaped the subspace; map is not A-linear")
        return x


def _sum_names(names: list[str], vec: int) -> str:
    parts = []
    while vec:
        i = lowest_bit(vec)
        parts.append(names[i])
        vec &= vec - 1
    return " + ".join(parts) if parts else "0"


def kernel(f: ModuleMap) -> tuple[CompiledModule, ModuleMap]:
    """Degreewise kernel with the induced action, plus its inclusion."""
    src = f.source
    vectors: dict[int, list[int]] = {}
    for t in src.degrees():
        elim = Elimination(track_transform=True)
        vecs = []
        for i in range(src.dim(t)):
            residual, tr = elim.add(f.row(t, i))
            if residual == 0:
                vecs.append(tr)
        if vecs:
            vectors[t] = vecs
    sub = _SolvedSubspace(vectors)
    dims = {t: len(v) for t, v in vectors.items()}
    names = {
        t: [_sum_names(src.basis_names(t), v) for v in vecs]
        for t, vecs in vectors.items()
    }

    def act(mono, t, idx):
        w = src.act_vec(mono, t, vectors[t][idx])
        return sub.coords(t + milnor.degree(mono), w)

    ker = CompiledModule(f"ker({src.name})", dims, names, act, src.cap)
    incl = ModuleMap(ker, src, {t: list(vecs) for t, vecs in vectors.items()})
    return ker, incl


def image(f: ModuleMap) -> tuple[CompiledModule, ModuleMap]:
    """The image as a submodule of the target, plus its inclusion."""
    tgt = f.target
    vectors: dict[int, list[int]] = {}
    for t, rows in sorted(f.mats.items()):
        elim = Elimination()
        vecs = []
        for r in rows:
            residual, _ = elim.add(r)
            if residual:
                vecs.append(residual)
        if vecs:
            vectors[t] = vecs
    sub = _SolvedSubspace(vectors)
    dims = {t: len(v) for t, v in vectors.items()}
    names = {
        t: [_sum_names(tgt.basis_names(t), v) for v in vecs]
        for t, vecs in vectors.items()
    }

    def act(mono, t, idx):
        w = tgt.act_vec(mono, t, vectors[t][idx])
        return sub.coords(t + milnor.degree(mono), w)

    img = CompiledModule(f"im->{tgt.name}", dims, names, act, tgt.cap)
    incl = ModuleMap(img, tgt, {t: list(vecs) for t, vecs in vectors.items()})
    return img, incl


def quotient_by_image(f: ModuleMap) -> tuple[CompiledModule, ModuleMap]:
    """The cokernel of f, plus the projection from the target."""
    tgt = f.target
    elims: dict[int, Elimination] = {}
    for t in tgt.degrees():
        elim = Elimination()
        for r in f.mats.get(t, []):
            elim.add(r)
        elims[t] = elim
    kept: dict[int, list[int]] = {}
    coord: dict[int, dict[int, int]] = {}
    for t in tgt.degrees():
        pivots = elims[t].pivot_row
        idxs = [i for i in range(tgt.dim(t)) if i not in pivots]
        if idxs:
            kept[t] = idxs
        coord[t] = {i: j for j, i in enumerate(idxs)}

    def project(t, vec):
        if t not in elims:
            return 0
        residual = _reduce_full(elims[t], vec)
        out = 0
        while residual:
            b = lowest_bit(residual)
            out |= 1 << coord[t][b]
            residual &= residual - 1
        return out

    dims = {t: len(idxs) for t, idxs in kept.items()}
    names = {
        t: [tgt.basis_names(t)[i] for i in idxs] for t, idxs in kept.items()
    }

    def act(mono, t, idx):
        rep = 1 << kept[t][idx]
        w = tgt.act_vec(mono, t, rep)
        return project(t + milnor.degree(mono), w)

    quo = CompiledModule(f"{tgt.name}/im", dims, names, act, tgt.cap)
    proj = ModuleMap(
        tgt, quo, {t: [project(t, 1 << i) for i in range(tgt.dim(t))] for t in tgt.degrees()}
    )
    return quo, proj


def direct_sum(mods: list[CompiledModule], name: str | None = None) -> tuple[CompiledModule, list[ModuleMap], list[ModuleMap]]:
    """Direct sum with inclusion and projection maps for each summand."""
    cap = max(m.cap for m in mods)
    offsets: dict[int, list[int]] = {}
    dims: dict[int, int] = {}
    for t in range(cap + 1):
        offs = []
        total = 0
        for m in mods:
            offs.append(total)
            total += m.dim(t)
        if total:
            dims[t] = total
            offsets[t] = offs
    names = {
        t: [nm for m in mods for nm in m.basis_names(t)] for t in dims
    }

    def act(mono, t, idx):
        offs = offsets[t]
        for k in reversed(range(len(mods))):
            if idx >= offs[k]:
                local = idx - offs[k]
                w = mods[k].act_basis(mono, t, local)
                target = t + milnor.degree(mono)
                if target not in offsets:
                    return 0
                return w << offsets[target][k]
        raise IndexError(idx)

    total = CompiledModule(name or "(+)".join(m.name for m in mods), dims, names, act, cap)
    incls, projs = [], []
    for k, m in enumerate(mods):
        inc_mats = {}
        proj_mats = {}
        for t in m.degrees():
            if t in offsets:
                inc_mats[t] = [1 << (offsets[t][k] + i) for i in range(m.dim(t))]
        for t in dims:
            rows = []
            off = offsets[t][k]
            d = m.dim(t)
            for i in range(dims[t]):
                local = i - off
                rows.append(1 << local if 0 <= local < d else 0)
            proj_mats[t] = rows
        incls.append(ModuleMap(m, total, inc_mats))
        projs.append(ModuleMap(total, m, proj_mats))
    return total, incls, projs


def submodule_generated(
    mod: CompiledModule, seeds: list[tuple[int, int]]
) -> dict[int, list[int]]:
    """Per-degree echelon spans of the submodule the seeds generate.

    Closure is taken under the algebra generators Sq(2^k), which suffice
    to generate every monomial action through the cap.
    """
    elims: dict[int, Elimination] = {}
    spans: dict[int, list[int]] = {}
    queue: list[tuple[int, int]] = []

    def push(t: int, vec: int) -> None:
        if not vec or t > mod.cap:
            return
        elim = elims.setdefault(t, Elimination())
        residual, _ = elim.add(vec)
        if residual:
            spans.setdefault(t, []).append(vec)
            queue.append((t, vec))

    for t, vec in seeds:
        push(t, vec)
    while queue:
        t, vec = queue.pop()
        k = 0
        while t + (1 << k) <= mod.cap:
            push(t + (1 << k), mod.act_vec(((1 << k),), t, vec))
            k += 1
    return spans


def quotient_by_subspace(
    mod: CompiledModule, spans: dict[int, list[int]], name: str | None = None
) -> tuple[CompiledModule, ModuleMap]:
    """Quotient by an action-closed graded subspace, with the projection."""
    elims: dict[int, Elimination] = {}
    for t, vecs in spans.items():
        elim = Elimination()
        for v in vecs:
            elim.add(v)
        elims[t] = elim
    kept: dict[int, list[int]] = {}
    coord: dict[int, dict[int, int]] = {}
    for t in mod.degrees():
        pivots = elims[t].pivot_row if t in elims else {}
        idxs = [i for i in range(mod.dim(t)) if i not in pivots]
        if idxs:
            kept[t] = idxs
        coord[t] = {i: j for j, i in enumerate(idxs)}

    def project(t: int, vec: int) -> int:
        if t not in coord:
            return 0
        if t in elims:
            vec = _reduce_full(elims[t], vec)
        out = 0
        while vec:
            b = lowest_bit(vec)
            out |= 1 << coord[t][b]
            vec &= vec - 1
        return out

    dims = {t: len(idxs) for t, idxs in kept.items()}
    names = {t: [mod.basis_names(t)[i] for i in idxs] for t, idxs in kept.items()}

    def act(mono, t, idx):
        rep = 1 << kept[t][idx]
        return project(t + milnor.degree(mono), mod.act_vec(mono, t, rep))

    quo = CompiledModule(name or f"{mod.name}/sub", dims, names, act, mod.cap)
    proj = ModuleMap(
        mod, quo, {t: [project(t, 1 << i) for i in range(mod.dim(t))] for t in mod.degrees()}
    )
    quo.gens = {g: (d, proj.apply(d, v)) for g, (d, v) in mod.gens.items()}
    quo.ambient_reps = kept
    return quo, proj


def kill_odd_degrees(mod: CompiledModule, name: str | None = None) -> CompiledModule:
    """Quotient by the submodule generated by all odd-degree classes.

    This is the evenization step of doubling: a doubled presentation can
    never contain odd-degree relations, so its stray odd classes (and
    whatever they generate) are removed here.
    """
    seeds = [
        (t, 1 << i)
        for t in mod.degrees()
        if t % 2
        for i in range(mod.dim(t))
    ]
    if not seeds:
        return mod
    spans = submodule_generated(mod, seeds)
    quo, _ = quotient_by_subspace(mod, spans, name=name or f"{mod.name}_even")
    return quo


# -- module element expressions ------------------------------------------

_NAME = re.compile(r"[A-Za-z][A-Za-z0-9_']*")


def parse_module_element(mod: CompiledModule, text: str) -> tuple[int, int]:
    """Evaluate expressions like `Sq8 Sq4 k2 + (Sq3 Sq1 k1 + k1') `.

    Returns (degree, vector); generator names must be registered on the
    module.  Raises ModuleError on inhomogeneous sums or unknown names.
    """
    text = text.strip()
    if text == "0":
        return (-1, 0)
    pos = 0

    def skip_ws():
        nonlocal pos
        while pos < len(text) and text[pos].isspace():
            pos += 1

    def parse_sum() -> tuple[int, int]:
        nonlocal pos
        deg, vec = parse_part()
        while True:
            skip_ws()
            if pos < len(text) and text[pos] == "+":
                pos += 1
                d2, v2 = parse_part()
                if vec == 0:
                    deg, vec = d2, v2
                elif v2 != 0:
                    if d2 != deg:
                        raise ModuleError(f"inhomogeneous sum in {text!r}")
                    vec ^= v2
            else:
                return deg, vec

    def parse_part() -> tuple[int, int]:
        nonlocal pos
        skip_ws()
        if pos < len(text) and text[pos] == "(":
            pos += 1
            deg, vec = parse_sum()
            skip_ws()
            if pos >= len(text) or text[pos] != ")":
                raise ModuleError(f"unbalanced parenthesis in {text!r}")
            pos += 1
            return deg, vec
        word: list[Monomial] = []
        while True:
            skip_ws()
            m = re.compile(r"Sq\^?(?:(\d+)|\((\d+(?:,\d+)*)\))").match(text, pos)
            if m:
                pos = m.end()
                if m.group(1) is not None:
                    word.append(milnor.trim((int(m.group(1)),)))
                else:
                    word.append(milnor.trim(tuple(int(x) for x in m.group(2).split(","))))
                continue
            nm = _NAME.match(text, pos)
            if not nm:
                raise ModuleError(f"expected generator name at {text[pos:pos+12]!r}")
            gname = nm.group(0)
            pos = nm.end()
            if gname not in mod.gens:
                raise ModuleError(f"unknown generator {gname!r} in module {mod.name}")
            gdeg, gvec = mod.gens[gname]
            return mod.act_word(word, gdeg, gvec)

    deg, vec = parse_sum()
    skip_ws()
    if pos != len(text):
        raise ModuleError(f"trailing input in {text!r}")
    if vec == 0:
        return (-1, 0)
    return deg, vec


# -- module definition files ----------------------------------------------


def parse_module_file(text: str) -> Presentation:
    """Parse the module text format:

        module <name>
        gen <gname> <degree>
        rel <element> <gname> [+ <element> <gname>]...
        truncate <lo> <hi>

    where <element> is a single product of Sq atoms or a parenthesized sum.
    """
    name = None
    gens: list[tuple[str, int]] = []
    rels: list[tuple[tuple[Element, int], ...]] = []
    window = None
    gen_index: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "module":
            name = parts[1]
        elif kind == "gen":
            gname, deg = parts[1], int(parts[2])
            gen_index[gname] = len(gens)
            gens.append((gname, deg))
        elif kind == "rel":
            body = line[len("rel"):].strip()
            rels.append(_parse_relation(body, gen_index, lineno))
        elif kind == "truncate":
            window = (int(parts[1]), int(parts[2]))
        else:
            raise ModuleError(f"line {lineno}: unknown directive {kind!r}")
    if name is None:
        raise ModuleError("missing module header")
    return Presentation(name, tuple(gens), tuple(rels), window)


def _parse_relation(body: str, gen_index: dict[str, int], lineno: int):
    terms = []
    for chunk in _split_top_level_plus(body):
        chunk = chunk.strip()
        m = re.search(r"([A-Za-z][A-Za-z0-9_']*)$", chunk)
        if not m or m.group(1).startswith("Sq"):
            raise ModuleError(f"line {lineno}: relation term must end with a generator name: {chunk!r}")
        gname = m.group(1)
        if gname not in gen_index:
            raise ModuleError(f"line {lineno}: unknown generator {gname!r}")
        elem_text = chunk[: m.start(1)].strip()
        elem = milnor.parse_element(elem_text) if elem_text else Element.unit()
        terms.append((elem, gen_index[gname]))
    return tuple(terms)


def _split_top_level_plus(body: str) -> list[str]:
    out, depth, cur = [], 0, []
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "+" and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return out
