"""Exact extension complexes representing Ext classes.

An ExactExtension is a verified-exact complex

    0 <- F2 <- M_0 <- M_1 <- ... <- M_{s-1} <- S^t F2 <- 0

with compiled modules and A-linear boundary maps.  The library holds the
extensions for h_0..h_6, c_0, c_1, f_0, e_0 and d_0; c_1 is built from c_0
by doubling every Sq atom in its presentation and map files.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

from . import milnor, modules as md
from .modules import (
    CompiledModule,
    ModuleMap,
    Presentation,
    compile_presentation,
    parse_module_element,
    parse_module_file,
    sigma_f2,
)
from .linalg import Elimination


class ExtensionError(ValueError):
    pass


@dataclass
class ExactnessReport:
    """Degreewise exactness outcome; empty failures means the complex is exact."""

    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def __str__(self) -> str:
        return "exact" if self.ok else "; ".join(self.failures)


class ExactExtension:
    """Length-s extension with internal degree t.

    `mods` lists M_0 .. M_{s-1} followed by S^t F2; `boundaries[i]` maps
    mods[i] -> mods[i-1] for i >= 1, and `augmentation` sends the
    degree-zero classes of M_0 onto F2.
    """

    def __init__(self, name: str, t: int, mods: list[CompiledModule],
                 boundaries: list[ModuleMap], top_gen: str):
        self.name = name
        self.t = t
        self.mods = mods
        self.boundaries = boundaries
        self.top_gen = top_gen
        if len(boundaries) != len(mods) - 1:
            raise ExtensionError("need one boundary map between consecutive modules")

    @property
    def s(self) -> int:
        return len(self.mods) - 1

    def module(self, i: int) -> CompiledModule:
        return self.mods[i]

    def boundary(self, i: int) -> ModuleMap:
        """The map M_i -> M_{i-1} for 1 <= i <= s."""
        return self.boundaries[i - 1]

    def augmentation_vec(self, deg: int, vec: int) -> int:
        """Pair a degree-0 vector of M_0 with the F2 augmentation."""
        if deg != 0:
            return 0
        return 1 if bin(vec).count("1") % 2 else 0

    # -- exactness -------------------------------------------------------

    def verify_exact(self, through: int | None = None) -> ExactnessReport:
        """Degreewise rank checks at every node, through internal degree 2t."""
        cap = through if through is not None else 2 * self.t
        report = ExactnessReport()
        # composite of consecutive maps is zero
        for i in range(2, self.s + 1):
            if not self.boundary(i).then(self.boundary(i - 1)).is_zero():
                report.failures.append(f"d.d != 0 at M_{i-1}")
        for i in range(1, self.s + 1):
            if not self.boundary(i).commutes_with_action():
                report.failures.append(f"boundary M_{i} -> M_{i-1} is not A-linear")
        # augmentation: M_0 must surject onto F2 in degree 0
        if self.mods[0].dim(0) == 0:
            report.failures.append("M_0 has nothing in degree 0")
        # composite F2 <- M_0 <- M_1 vanishes
        b1 = self.boundary(1)
        for vec_idx in range(self.mods[1].dim(0)):
            if self.augmentation_vec(0, b1.row(0, vec_idx)):
                report.failures.append("aug . d != 0 at M_0")
                break
        for d in range(cap + 1):
            # node M_0: kernel of augmentation = image of M_1
            out_rank = (1 if d == 0 and self.mods[0].dim(0) else 0)
            self._check_node(report, d, 0, out_rank, cap)
            for i in range(1, self.s):
                rows = self.boundary(i).mats.get(d, [])
                out_rank = _rank(rows)
                self._check_node(report, d, i, out_rank, cap)
            # injectivity of S^t F2 -> M_{s-1}
            if d == self.t:
                top = self.mods[self.s]
                if _rank(self.boundary(self.s).mats.get(d, [])) != top.dim(d):
                    report.failures.append(f"top map not injective in degree {d}")
        return report

    def _check_node(self, report: ExactnessReport, d: int, i: int, out_rank: int, cap: int):
        dim = self.mods[i].dim(d)
        in_rank = _rank(self.boundary(i + 1).mats.get(d, []))
        if in_rank != dim - out_rank:
            report.failures.append(
                f"not exact at M_{i} in degree {d}: dim {dim}, "
                f"rank in {in_rank}, rank out {out_rank}"
            )


def _rank(rows: list[int]) -> int:
    elim = Elimination()
    for r in rows:
        elim.add(r)
    return elim.rank


def splice(a: ExactExtension, b: ExactExtension, name: str | None = None) -> ExactExtension:
    """Yoneda splice: suspend b by a.t and glue along a's top copy of F2."""
    shifted_mods = [md.suspend(m, a.t) for m in b.mods]
    shifted_bnds = []
    for i in range(1, b.s + 1):
        orig = b.boundary(i)
        mats = {t + a.t: rows for t, rows in orig.mats.items()}
        shifted_bnds.append(ModuleMap(shifted_mods[i], shifted_mods[i - 1], mats))
    # glue: S^{a.t}(M_0^b) -> S^{a.t}F2 = top of a -> M^a_{s-1}
    glue_src = shifted_mods[0]
    glue_tgt = a.mods[a.s - 1]
    top_map = a.boundary(a.s)
    mats = {}
    for t in glue_src.degrees():
        rows = []
        for idx in range(glue_src.dim(t)):
            if t == a.t:
                # augmentation of b's M_0 against its bottom, then a's top map
                parity = b.mods[0].dim(0) and _aug_parity(b.mods[0], 1 << idx)
                rows.append(top_map.row(a.t, 0) if parity else 0)
            else:
                rows.append(0)
        mats[t] = rows
    glue = ModuleMap(glue_src, glue_tgt, mats)
    mods = a.mods[: a.s] + shifted_mods
    bnds = a.boundaries[: a.s - 1] + [glue] + shifted_bnds
    return ExactExtension(
        name or f"splice({a.name},{b.name})", a.t + b.t, mods, bnds, b.top_gen
    )


def _aug_parity(m0: CompiledModule, vec: int) -> int:
    return bin(vec).count("1") % 2


def canonical_extension(res, x, cap: int | None = None) -> ExactExtension:
    """The pushout extension attached to a cocycle of the resolution.

    M_i is the pushout of C_{i+1} -> C_i and C_{i+1} -> M_{i+1}, built from
    the top down starting at M_s = S^t F2; the result represents the class,
    at the cost that M_i is essentially C_i for small i.
    """
    s, t = x.s, x.t
    cap = cap if cap is not None else 2 * t
    if res.s_max < s or res.t_max < cap:
        raise ExtensionError(
            f"resolution frontier ({res.s_max},{res.t_max}) below ({s},{cap})"
        )
    free = [_free_chain_module(res, i, cap) for i in range(s + 1)]
    top = sigma_f2(t, "ktop", cap=cap)
    mods: list[CompiledModule] = [None] * (s + 1)
    bnds: list[ModuleMap] = [None] * s
    mods[s] = top
    # upper_map is x_{i+1}: C_{i+1} -> M_{i+1}, starting with the cocycle.
    upper_map = _cocycle_map(res, free[s], top, x)
    for i in range(s - 1, -1, -1):
        d_map = _free_differential_map(res, free[i + 1], free[i], i + 1)
        total, incls, _ = md.direct_sum([free[i], mods[i + 1]], name=f"push{i}")
        graph_mats = {}
        for deg in free[i + 1].degrees():
            rows = []
            for idx in range(free[i + 1].dim(deg)):
                rows.append(
                    incls[0].apply(deg, d_map.row(deg, idx))
                    ^ incls[1].apply(deg, upper_map.row(deg, idx))
                )
            graph_mats[deg] = rows
        graph = ModuleMap(free[i + 1], total, graph_mats)
        pushout, proj = md.quotient_by_image(graph)
        mods[i] = pushout
        bnds[i] = incls[1].then(proj)
        upper_map = incls[0].then(proj)
    return ExactExtension(f"canonical({x})", t, mods, bnds, "ktop")


def _free_chain_module(res, i: int, cap: int) -> CompiledModule:
    gens = [(f"c{i}_{g}", res.gen_degree(i, g)) for g in range(res.gen_count(i))
            if res.gen_degree(i, g) <= cap]
    return md.free_module(f"C{i}", gens, cap)


def _cocycle_map(res, c_s: CompiledModule, top: CompiledModule, x) -> ModuleMap:
    images = {}
    for g in range(res.gen_count(x.s)):
        name = f"c{x.s}_{g}"
        if name not in c_s.gens:
            continue
        if g in x.gens and res.gen_degree(x.s, g) == x.t:
            images[name] = (x.t, 1)
        else:
            images[name] = (x.t, 0)
    return ModuleMap.from_gen_images(c_s, top, images)


def _free_differential_map(res, c_hi: CompiledModule, c_lo: CompiledModule, s: int) -> ModuleMap:
    images = {}
    for g in range(res.gen_count(s)):
        name = f"c{s}_{g}"
        if name not in c_hi.gens:
            continue
        deg = res.gen_degree(s, g)
        vec = 0
        for h, coefs in res.diffs[s][g].items():
            hname = f"c{s-1}_{h}"
            if hname not in c_lo.gens:
                continue
            hdeg, hvec = c_lo.gens[hname]
            for mono in coefs:
                vec ^= c_lo.act_vec(mono, hdeg, hvec)
        images[name] = (deg, vec)
    return ModuleMap.from_gen_images(c_hi, c_lo, images)


# -- the extension file format and library ---------------------------------


def parse_extension_file(text: str, loader) -> ExactExtension:
    """Parse the extension format:

        extension <name>
        top <gen> <degree>
        module <path>
        map <gen> -> <element> (over the previous module's generators)
    """
    name, top_spec = None, None
    module_paths: list[str] = []
    map_lines: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        kind = parts[0]
        if kind == "extension":
            name = parts[1].strip()
        elif kind == "top":
            gen, deg = parts[1].split()
            top_spec = (gen, int(deg))
        elif kind == "module":
            module_paths.append(parts[1].strip())
        elif kind == "map":
            lhs, rhs = parts[1].split("->")
            map_lines.append((lhs.strip(), rhs.strip()))
        else:
            raise ExtensionError(f"line {lineno}: unknown directive {kind!r}")
    if name is None or top_spec is None or not module_paths:
        raise ExtensionError("extension file needs a name, a top, and modules")
    top_gen, t = top_spec
    mods = []
    for p in module_paths:
        pres = parse_module_file(loader(p))
        mods.append(compile_presentation(pres, min(pres.window[1] if pres.window else 2 * t, 2 * t)))
    mods.append(sigma_f2(t, top_gen, cap=t))
    gen_home = {}
    for i, m in enumerate(mods):
        for g in m.gens:
            if g in gen_home:
                raise ExtensionError(f"generator name {g!r} reused across modules")
            gen_home[g] = i
    bnds: list[ModuleMap | None] = [None] * (len(mods) - 1)
    images: list[dict] = [dict() for _ in mods]
    for lhs, rhs in map_lines:
        if lhs not in gen_home:
            raise ExtensionError(f"map source {lhs!r} is not a module generator")
        i = gen_home[lhs]
        if i == 0:
            raise ExtensionError("M_0 maps to F2 implicitly; no map line expected")
        deg, vec = parse_module_element(mods[i - 1], rhs)
        gdeg = mods[i].gens[lhs][0]
        if vec and deg != gdeg:
            raise ExtensionError(f"map {lhs} -> {rhs} is not degree-preserving")
        images[i][lhs] = (gdeg, vec)
    for i in range(1, len(mods)):
        missing = set(mods[i].gens) - set(images[i])
        if missing:
            raise ExtensionError(f"missing map lines for {sorted(missing)}")
        bnds[i - 1] = ModuleMap.from_gen_images(mods[i], mods[i - 1], images[i])
    return ExactExtension(name, t, mods, bnds, top_gen)


def _data_loader(rel_path: str) -> str:
    return resources.files("extsq.data").joinpath(rel_path).read_text()


LIBRARY_NAMES = tuple(
    [f"h{i}" for i in range(7)] + ["c0", "c1", "f0", "e0", "d0"]
)


def _double_source(text: str) -> str:
    """Replace every SqN atom by Sq2N and double truncation bounds."""

    def dbl_atom(m):
        if m.group(1):
            return "Sq" + str(2 * int(m.group(1)))
        entries = ",".join(str(2 * int(x)) for x in m.group(2).split(","))
        return f"Sq({entries})"

    out_lines = []
    for line in text.splitlines():
        line = re.sub(r"Sq(?:(\d+)|\((\d+(?:,\d+)*)\))", dbl_atom, line)
        parts = line.split()
        if parts and parts[0] in ("truncate", "gen", "top"):
            parts[-1] = str(2 * int(parts[-1]))
            if parts[0] == "truncate":
                parts[1] = str(2 * int(parts[1]))
            line = " ".join(parts)
        out_lines.append(line)
    return "\n".join(out_lines)


def _evenize_extension(ext: ExactExtension) -> ExactExtension:
    """Quotient every module by the submodule its odd classes generate.

    Doubled presentations cannot carry odd-degree relations, so the stray
    odd classes (unavoidable below the first doubled relation) are removed
    here; the even-degree content, which is what doubling means, survives.
    """
    new_mods, projs, sections = [], [], []
    for m in ext.mods:
        seeds = [(t, 1 << i) for t in m.degrees() if t % 2 for i in range(m.dim(t))]
        if not seeds:
            new_mods.append(m)
            projs.append(ModuleMap.identity(m))
            sections.append(ModuleMap.identity(m))
            continue
        spans = md.submodule_generated(m, seeds)
        quo, proj = md.quotient_by_subspace(m, spans, name=m.name + "_even")
        section = ModuleMap(
            quo,
            m,
            {
                t: [1 << quo.ambient_reps[t][j] for j in range(quo.dim(t))]
                for t in quo.degrees()
            },
        )
        new_mods.append(quo)
        projs.append(proj)
        sections.append(section)
    new_bnds = [
        sections[i].then(ext.boundary(i)).then(projs[i - 1])
        for i in range(1, ext.s + 1)
    ]
    return ExactExtension(ext.name, ext.t, new_mods, new_bnds, ext.top_gen)


def library(name: str, verify: bool = True) -> ExactExtension:
    """Load a named extension; c1 is built by doubling c0's source files."""
    if name not in LIBRARY_NAMES:
        raise ExtensionError(f"unknown extension {name!r}; have {LIBRARY_NAMES}")
    if name.startswith("h"):
        i = int(name[1:])
        ext = _h_extension(i)
    elif name == "c1":
        loader = lambda p: _double_source(_data_loader(p))
        ext = parse_extension_file(_double_source(_data_loader("extensions/c0.ext")), loader)
        ext = _evenize_extension(ext)
        ext.name = "c1"
    else:
        ext = parse_extension_file(_data_loader(f"extensions/{name}.ext"), _data_loader)
    if verify:
        report = ext.verify_exact()
        if not report.ok:
            raise ExtensionError(f"library extension {name} failed exactness: {report}")
    return ext


def _h_extension(i: int) -> ExactExtension:
    n = 1 << i
    rels = tuple(((milnor.Element.from_monomial((1 << k,)), 0),) for k in range(i))
    m0 = compile_presentation(Presentation(f"h{i}_m0", (("x0", 0),), rels, (0, n)), n)
    top = sigma_f2(n, "x1", cap=n)
    bnd = ModuleMap.from_gen_images(
        top, m0, {"x1": (n, m0.act_vec((n,), 0, m0.gens["x0"][1]))}
    )
    return ExactExtension(f"h{i}", n, [m0, top], [bnd], "x1")
