"""Placement of hierarchical networks onto a single lattice, path routing,
congestion accounting, and assembly of the resulting embedded network.

Placement schemes position every tensor on a host grid:

* naive: layer-tau cell n sits at b**tau * n, stacking all layers above
  the origin region.
* shifted: layer-tau cell n sits at b**tau * n + b**(tau-1), which puts
  each layer on its own scale sublattice.
* refined: the host grid is refined by b**dt and layer-tau cell n sits at
  b**(tau+dt) * n + b**tau * m + b**(tau-1), where the offset m depends on
  the tensor variant.  This spreads the tensors of one cell over distinct
  sites.

Routed paths are L1-shortest and axis-monotone.  A path traverses its
non-approach axes first, riding grid lines of the source's scale, and
covers the approach axis last, riding a grid line of the target's scale.
Most lines approach along the last axis, so their first leg rides the
source's row and the final leg the target's column.  Physical legs into a
2x1 disentangler approach along the first axis instead, matching its
transposed offset pattern.  Isometry lines into an apex isometry, one
that is the only tensor of its layer and so gathers every input
directly, split over both grid lines through the apex: strongly
horizontal ones approach along the first axis, the rest along the last.
Isometry lines into a 2x1 disentangler travel far along both axes, and
the disentangler shares its column with the isometry it feeds, so that
column is already full.  Their vertical stretch rides a coarse track
instead: the column at a multiple of b**layer nearest the source, when
one lies within the line's horizontal span.  Track columns are free of
finer-layer traffic, and picking the multiple on the source's side
spreads lines that share a target over distinct tracks.  Finally, a
1x2 disentangler's line down to the isometry a cell below approaches
along the first axis when the horizontal hop exceeds b, descending its
own free column rather than the target's.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import Edge, LatticeSpec, Site, canonical_edge
from .tns import (KIND_ANCHOR, KIND_DISENTANGLER, KIND_ISOMETRY, KIND_TOP,
                  ContractionLine, MeraMeta, Tns)

_KIND_RANK = {KIND_ANCHOR: 0, KIND_DISENTANGLER: 1, KIND_ISOMETRY: 2,
              KIND_TOP: 3}


def default_refined_offsets(dimension: int) -> dict[str, tuple[int, ...]]:
    """Per-variant sub-cell offsets used by the refined scheme.

    Isometries and tops take the far corner of the cell, full disentanglers
    the near corner, and the partial disentanglers the mixed corners that
    align them with the block boundary they straddle.
    """
    zeros = (0,) * dimension
    ones = (1,) * dimension
    offsets = {"u": zeros, "u2x2": zeros, "g": zeros, "w": ones, "t": ones}
    if dimension >= 2:
        offsets["u2x1"] = (1,) + zeros[1:]
        offsets["u1x2"] = (0, 1) + zeros[2:]
    return offsets


@dataclass
class Placement:
    scheme: str
    lattice: LatticeSpec
    delta_tau: int
    site_of: dict[str, Site]
    anchor_ids: frozenset[str]
    offsets: dict[str, tuple[int, ...]] | None = None

    @property
    def refine_factor(self) -> int:
        return self.lattice.branching ** self.delta_tau


def _tensor_site(scheme, b, tau, cell, dt, m):
    if scheme == "naive":
        return tuple(b ** tau * c for c in cell)
    if scheme == "shifted":
        return tuple(b ** tau * c + b ** (tau - 1) for c in cell)
    return tuple(b ** (tau + dt) * c + b ** tau * mi + b ** (tau - 1)
                 for c, mi in zip(cell, m))


def _place(tns: Tns, scheme: str, delta_tau: int = 0,
           offsets=None) -> Placement:
    b = tns.spec.branching
    d = tns.spec.dimension
    if scheme == "refined":
        if delta_tau < 1:
            raise ValueError("refined placement needs delta_tau >= 1")
        if offsets is None:
            offsets = default_refined_offsets(d)
        factor = b ** delta_tau
        for variant, m in offsets.items():
            if len(m) != d or any(not 0 <= mi < factor for mi in m):
                raise ValueError(f"offset {m} for {variant!r} outside "
                                 f"[0, {factor})^{d}")
        host = LatticeSpec(d, tns.spec.length * factor, b,
                           tns.spec.layers + delta_tau, tns.spec.boundary)
    else:
        delta_tau, offsets, factor = 0, None, 1
        host = tns.spec

    site_of = {}
    anchor_ids = set()
    for node in tns.nodes.values():
        if node.kind == KIND_ANCHOR:
            anchor_ids.add(node.id)
            site = tuple(factor * c for c in node.cell)
            if scheme == "refined" and d >= 2:
                # keep anchors off the tensor sublattices: x stays even
                # except for an offset of 1, which no layer >= 2 site has,
                # and layer-1 sites differ in the remaining parities
                site = (site[0] + 1,) + site[1:]
        else:
            m = offsets.get(node.variant, (0,) * d) if offsets else None
            site = _tensor_site(scheme, b, node.layer, node.cell,
                                delta_tau, m)
        if not host.contains(site):
            raise ValueError(f"{node.id} placed outside the host lattice "
                             f"at {site}")
        site_of[node.id] = site
    return Placement(scheme, host, delta_tau, site_of, frozenset(anchor_ids),
                     offsets)


def place_naive(tns: Tns) -> Placement:
    """Scale positions by b**tau only; layers pile up near the origin."""
    return _place(tns, "naive")


def place_shifted(tns: Tns) -> Placement:
    """Offset layer tau by b**(tau-1); each layer gets its own sublattice."""
    return _place(tns, "shifted")


def place_refined(tns: Tns, delta_tau: int = 1, offsets=None) -> Placement:
    """Place on a b**delta_tau refined grid with per-variant offsets."""
    return _place(tns, "refined", delta_tau, offsets)


@dataclass
class StackReport:
    counts: dict[Site, int]
    max_height: int


def detect_stacks(p: Placement, include_anchors: bool = False) -> StackReport:
    """Per-site tensor counts.  Anchors are bookkeeping and excluded by
    default."""
    counts: dict[Site, int] = {}
    for nid, site in p.site_of.items():
        if not include_anchors and nid in p.anchor_ids:
            continue
        counts[site] = counts.get(site, 0) + 1
    return StackReport(counts, max(counts.values(), default=0))


def _orient(tns: Tns, line: ContractionLine):
    """Deterministic (source, target) endpoint order for routing."""
    (na, sa), (nb, sb) = line.endpoints()
    pa, pb = tns.nodes[na], tns.nodes[nb]
    ka = (pa.layer, _KIND_RANK[pa.kind], pa.id)
    kb = (pb.layer, _KIND_RANK[pb.kind], pb.id)
    return (na, nb) if ka <= kb else (nb, na)


def _junction_axis(s: Site, t: Site) -> int:
    """Approach axis for a line feeding an apex isometry.

    Apex inputs form a co-columnar cluster: routed through the last axis
    alone they would all descend the one column through the apex.  Lines
    that run strongly horizontal, at least four times as far along the
    first axis as the second, leave their source's row early and approach
    along the target's row instead, which splits the cluster over both
    grid lines through the apex.  The remaining lines approach along the
    last axis so their first leg stays on the source's row and off the
    column that carries the source's own inputs.  Straight lines need no
    choice and higher dimensions fall back to the last axis.
    """
    d = len(s)
    if d != 2:
        return d - 1
    dx, dy = abs(t[0] - s[0]), abs(t[1] - s[1])
    if dy == 0:
        return 0
    if dx == 0:
        return 1
    return 0 if dx >= 4 * dy else 1


def _apex_isometries(tns: Tns) -> frozenset[str]:
    """Ids of isometries that are the only one of their layer.

    Such a layer has a single cell, so no disentangler precedes it and the
    apex gathers every input directly.
    """
    per_layer: dict[int, list[str]] = {}
    for node in tns.nodes.values():
        if node.kind == KIND_ISOMETRY:
            per_layer.setdefault(node.layer, []).append(node.id)
    return frozenset(ids[0] for ids in per_layer.values() if len(ids) == 1)


def _approach_axis(tns: Tns, apex: frozenset[str], src: str, dst: str,
                   s: Site, t: Site) -> int:
    """Final-segment axis for the line from src at s to dst at t."""
    d = len(s)
    if d == 1:
        return 0
    if tns.nodes[src].kind == KIND_ISOMETRY and dst in apex:
        return _junction_axis(s, t)
    if (tns.nodes[dst].variant == "u2x1"
            and tns.nodes[src].kind == KIND_ANCHOR):
        return 0
    if (tns.nodes[src].variant == "u1x2"
            and tns.nodes[dst].kind == KIND_ISOMETRY
            and abs(t[0] - s[0]) > tns.spec.branching):
        return 0
    return d - 1


@dataclass
class PathAssignment:
    """Vertex chains per line id, plus the orientation used to build them.

    info maps line id to (source id, target id, approach axis).  A chain of
    length one denotes co-located endpoints and crosses no edge.
    """

    chains: dict[int, tuple[Site, ...]]
    info: dict[int, tuple[str, str, int]] = field(default_factory=dict)

    def path_of(self, line_id: int) -> tuple[Edge, ...]:
        chain = self.chains[line_id]
        return tuple(canonical_edge(chain[i], chain[i + 1])
                     for i in range(len(chain) - 1))

    def length_of(self, line_id: int) -> int:
        return len(self.chains[line_id]) - 1


def _coarse_track(s_val: int, t_val: int, step: int) -> int | None:
    """Multiple of step nearest s_val within [s_val, t_val], or None.

    Taking the multiple on the source's side spreads lines that share a
    target over distinct tracks, one per source.
    """
    if t_val >= s_val:
        track = -((-s_val) // step) * step
        return track if track <= t_val else None
    track = (s_val // step) * step
    return track if track >= t_val else None


def _is_narrow_gather(tns: Tns, src: str, dst: str) -> bool:
    """True for isometry lines into a 2x1 disentangler.

    Such lines travel far along both axes, and their vertical stretch
    would land on a collect column that is already full: a 2x1
    disentangler shares its column with the isometry above it.  They
    ride a coarse vertical track instead.  The 1x2 case needs none of
    this; its own column carries no gathering isometry.
    """
    return (tns.nodes[src].kind == KIND_ISOMETRY
            and tns.nodes[dst].variant == "u2x1")


def _walk_to(chain: list[Site], cur: list[int], wp: Site) -> None:
    for ax in range(len(wp)):
        sgn = 1 if wp[ax] > cur[ax] else -1
        while cur[ax] != wp[ax]:
            cur[ax] += sgn
            chain.append(tuple(cur))


def _route_one(tns: Tns, p: Placement, apex: frozenset[str], src: str,
               dst: str, s: Site, t: Site) -> tuple[tuple[Site, ...], int]:
    d = len(s)
    if d == 2 and _is_narrow_gather(tns, src, dst):
        step = p.lattice.branching ** tns.nodes[dst].layer
        track = _coarse_track(s[0], t[0], step)
        if track is not None:
            w1 = list(s)
            w1[0] = track
            w2 = list(t)
            w2[0] = track
            chain = [s]
            cur = list(s)
            for wp in (tuple(w1), tuple(w2), t):
                _walk_to(chain, cur, wp)
            return tuple(chain), 0
    axis = _approach_axis(tns, apex, src, dst, s, t)
    order = [i for i in range(d) if i != axis] + [axis]
    chain = [s]
    cur = list(s)
    for ax in order:
        sgn = 1 if t[ax] > cur[ax] else -1
        while cur[ax] != t[ax]:
            cur[ax] += sgn
            chain.append(tuple(cur))
    return tuple(chain), axis


def route_lines(tns: Tns, p: Placement) -> PathAssignment:
    """Deterministic L1-shortest paths for every contraction line.

    Axis order is all non-approach axes ascending, then the approach axis
    of the endpoint pair, so the final segment runs on the target's grid
    line and the earlier segments on the source's.  Isometry lines into a
    2x1 disentangler instead ride the coarse track nearest the source
    when their horizontal span contains one, crossing over to it on the
    source's grid line and leaving it on the target's.
    """
    chains = {}
    info = {}
    apex = _apex_isometries(tns)
    for line in tns.lines:
        src, dst = _orient(tns, line)
        s, t = p.site_of[src], p.site_of[dst]
        chain, axis = _route_one(tns, p, apex, src, dst, s, t)
        chains[line.id] = chain
        info[line.id] = (src, dst, axis)
    return PathAssignment(chains, info)


@dataclass
class CongestionReport:
    """Edge usage of a routed placement.

    edge_lines maps each traversed edge to the ids of the lines crossing
    it.  Physical-leg lines (those ending on an anchor) can be included or
    excluded from every figure; embedded-network bond dimensions include
    them, while the interior congestion figures of the refined scheme
    exclude them.
    """

    edge_lines: dict[Edge, tuple[int, ...]]
    line_dims: dict[int, int]
    physical_lines: frozenset[int]

    def _counted(self, lines, include_physical):
        if include_physical:
            return lines
        return tuple(l for l in lines if l not in self.physical_lines)

    def paths_through(self, edge: Edge, include_physical: bool = True) -> int:
        return len(self._counted(self.edge_lines.get(edge, ()),
                                 include_physical))

    def bond_dim_of(self, edge: Edge, include_physical: bool = True) -> int:
        dim = 1
        for l in self._counted(self.edge_lines.get(edge, ()),
                               include_physical):
            dim *= self.line_dims[l]
        return dim

    def max_paths(self, include_physical: bool = True) -> int:
        return max((len(self._counted(ls, include_physical))
                    for ls in self.edge_lines.values()), default=0)

    def busiest_edge(self, include_physical: bool = True):
        best, best_edge = 0, None
        for edge in sorted(self.edge_lines):
            n = self.paths_through(edge, include_physical)
            if n > best:
                best, best_edge = n, edge
        return best_edge, best

    def chi_peps(self, include_physical: bool = True) -> int:
        return max((self.bond_dim_of(e, include_physical)
                    for e in self.edge_lines), default=1)

    def log_chi_peps(self, chi: int, include_physical: bool = True) -> float:
        if chi < 2:
            raise ValueError("chi must be >= 2 for a log-chi figure")
        return math.log(self.chi_peps(include_physical)) / math.log(chi)


def measured_chi(tns: Tns, paths: PathAssignment) -> CongestionReport:
    """Tally routed lines per lattice edge."""
    edge_lines: dict[Edge, list[int]] = {}
    for lid in paths.chains:
        for edge in paths.path_of(lid):
            edge_lines.setdefault(edge, []).append(lid)
    return CongestionReport(
        {e: tuple(sorted(ls)) for e, ls in sorted(edge_lines.items())},
        {ln.id: ln.dim for ln in tns.lines},
        frozenset(ln.id for ln in tns.lines if tns.is_physical_line(ln)),
    )


def chi_bound(meta: MeraMeta, dimension: int) -> int:
    """Size-independent cap on the log-chi bond dimension of the embedding.

    Combines the worst-case number of lines that can share one edge: those
    bridging nearby cells of the same scale, across the allowed layer
    distance, for every tensor of a cell, at every order.
    """
    b = meta.branching
    reach = (2 * meta.max_cell_distance) ** dimension
    spread = meta.max_layer_distance + b ** (dimension *
                                             (meta.max_layer_distance + 1))
    return reach * spread * meta.max_tensors_per_cell * meta.max_tensor_order


def line_density_estimate(dimension: int, branching: int, layers: int) -> float:
    """Sum over scales of the per-edge line density b**(-(D-1) tau).

    Diverges linearly in layers for D = 1 and converges geometrically for
    D >= 2, which is why congestion stays bounded only above one dimension.
    """
    return float(sum(branching ** (-(dimension - 1) * tau)
                     for tau in range(layers + 1)))


def congestion_csv(report: CongestionReport) -> str:
    """CSV rows (edge_a, edge_b, paths, bond_dim), sorted by edge.

    Counts include physical-leg lines; interior-only figures are available
    through the report API.
    """
    def fmt(site):
        return ";".join(str(c) for c in site)

    rows = ["edge_a,edge_b,paths,bond_dim"]
    for edge in sorted(report.edge_lines):
        rows.append(f"{fmt(edge[0])},{fmt(edge[1])},"
                    f"{report.paths_through(edge)},"
                    f"{report.bond_dim_of(edge)}")
    return "\n".join(rows) + "\n"


@dataclass
class Factor:
    """One array of the embedded network with hashable index labels."""

    array: np.ndarray | None
    labels: tuple
    dims: tuple[int, ...]


@dataclass
class Peps:
    """Embedded network: per-site factor lists on the host grid.

    Contracting all factors over equal labels reproduces the original
    state; labels of the form ("p", site) are the open physical indices.
    edge_channels lists the (label, dim) pairs crossing each host edge, so
    the bond dimension of an edge is the product of its channel dims.
    """

    lattice: LatticeSpec
    physical_lattice: LatticeSpec
    refine_factor: int
    physical_dim: int
    site_factors: dict[Site, list[Factor]]
    edge_channels: dict[Edge, tuple[tuple[object, int], ...]]
    physical_host: dict[Site, Site]

    def bond_dim_of(self, edge: Edge) -> int:
        dim = 1
        for _, d in self.edge_channels.get(edge, ()):
            dim *= d
        return dim

    @property
    def chi_peps(self) -> int:
        return max((self.bond_dim_of(e) for e in self.edge_channels),
                   default=1)

    def all_factors(self) -> list[Factor]:
        out = []
        for site in sorted(self.site_factors):
            out.extend(self.site_factors[site])
        return out

    def site_tensor(self, site: Site):
        """Dense tensor of one site: factors contracted over labels shared
        within the site.  Returns (array, open labels)."""
        from .dense import contract_labeled
        factors = self.site_factors.get(site, [])
        if not factors:
            return np.array(1.0 + 0j), ()
        return contract_labeled([(f.array, f.labels) for f in factors])


def assemble_peps(tns: Tns, p: Placement, paths: PathAssignment) -> Peps:
    """Realize a routed placement as a grid network of local factors.

    Tensors become factors at their host sites.  A line of positive length
    is split into one label per traversed edge, joined by identity wires at
    the intermediate sites.  A physical leg keeps its open index at the
    anchor's host site through an identity wire, so the embedded network
    has one physical index per original site, located where the anchor was
    placed.
    """
    label_of: dict[tuple[str, int], object] = {}
    wires: dict[Site, list[Factor]] = {}
    edge_channels: dict[Edge, list] = {}
    physical_host: dict[Site, Site] = {}

    def add_wire(site, labels, dims, array):
        wires.setdefault(site, []).append(Factor(array, labels, dims))

    for line in tns.lines:
        src, dst = paths.info[line.id][0], paths.info[line.id][1]
        chain = paths.chains[line.id]
        src_slot = (line.a if line.a[0] == src else line.b)
        dst_slot = (line.b if src_slot is line.a else line.a)
        anchor_src = src in p.anchor_ids
        if anchor_src:
            phys = tns.nodes[src].cell
            physical_host[phys] = p.site_of[src]
        if len(chain) == 1:
            if anchor_src:
                label_of[dst_slot] = ("p", phys)
            else:
                label_of[src_slot] = label_of[dst_slot] = ("i", line.id)
            continue
        nedges = len(chain) - 1
        first, last = ("t", line.id, 0), ("t", line.id, nedges - 1)
        if anchor_src:
            add_wire(chain[0], (("p", phys), first),
                     (line.dim, line.dim), np.eye(line.dim))
        else:
            label_of[src_slot] = first
        label_of[dst_slot] = last
        for j in range(1, nedges):
            add_wire(chain[j], (("t", line.id, j - 1), ("t", line.id, j)),
                     (line.dim, line.dim), np.eye(line.dim))
        for j in range(nedges):
            edge = canonical_edge(chain[j], chain[j + 1])
            edge_channels.setdefault(edge, []).append(
                (("t", line.id, j), line.dim))

    site_factors: dict[Site, list[Factor]] = {}
    for node in tns.nodes.values():
        if node.kind == KIND_ANCHOR:
            continue
        labels = tuple(label_of[(node.id, slot)]
                       for slot in range(node.order))
        site = p.site_of[node.id]
        site_factors.setdefault(site, []).append(
            Factor(node.elements, labels, node.dims))
    for site, fs in wires.items():
        site_factors.setdefault(site, []).extend(fs)

    return Peps(
        lattice=p.lattice,
        physical_lattice=tns.spec,
        refine_factor=p.refine_factor,
        physical_dim=tns.physical_dim,
        site_factors={s: site_factors[s] for s in sorted(site_factors)},
        edge_channels={e: tuple(sorted(chs, key=lambda c: (c[0][1], c[0][2])))
                       for e, chs in sorted(edge_channels.items())},
        physical_host=physical_host,
    )


def contract_refined_to_normal(peps: Peps, delta_tau: int) -> Peps:
    """Merge b**delta_tau blocks of a refined embedding into single sites.

    Channels between sites of one block become internal to the merged site;
    channels crossing a block boundary multiply into the merged bond, so a
    merged edge carries the product of the parallel refined bonds.
    """
    b = peps.lattice.branching
    factor = b ** delta_tau
    if peps.refine_factor != factor:
        raise ValueError(f"embedding has refine factor {peps.refine_factor}, "
                         f"expected {factor}")
    coarse = peps.physical_lattice

    site_factors: dict[Site, list[Factor]] = {}
    for site in sorted(peps.site_factors):
        block = tuple(c // factor for c in site)
        site_factors.setdefault(block, []).extend(peps.site_factors[site])

    edge_channels: dict[Edge, list] = {}
    for (a, bb), channels in peps.edge_channels.items():
        pa = tuple(c // factor for c in a)
        pb = tuple(c // factor for c in bb)
        if pa == pb:
            continue
        edge = canonical_edge(pa, pb)
        edge_channels.setdefault(edge, []).extend(channels)

    return Peps(
        lattice=coarse,
        physical_lattice=coarse,
        refine_factor=1,
        physical_dim=peps.physical_dim,
        site_factors=site_factors,
        edge_channels={e: tuple(sorted(chs, key=lambda c: (c[0][1], c[0][2])))
                       for e, chs in sorted(edge_channels.items())},
        physical_host={phys: tuple(c // factor for c in host)
                       for phys, host in peps.physical_host.items()},
    )


def map_to_dict(p: Placement, paths: PathAssignment) -> dict:
    """JSON-ready description of a routed placement, format map-v1."""
    from .tns import GENERATOR_VERSION
    return {
        "version": "map-v1",
        "generator_version": GENERATOR_VERSION,
        "scheme": p.scheme,
        "delta_tau": p.delta_tau,
        "offsets": ({v: list(m) for v, m in sorted(p.offsets.items())}
                    if p.offsets else None),
        "lattice": {"dimension": p.lattice.dimension,
                    "length": p.lattice.length,
                    "branching": p.lattice.branching,
                    "layers": p.lattice.layers,
                    "boundary": p.lattice.boundary},
        "sites": [[nid, list(site)] for nid, site in sorted(p.site_of.items())],
        "paths": [[lid, [list(v) for v in chain]]
                  for lid, chain in sorted(paths.chains.items())],
    }


def map_from_dict(data: dict, tns: Tns) -> tuple[Placement, PathAssignment]:
    if data.get("version") != "map-v1":
        raise ValueError(f"unsupported map format {data.get('version')!r}")
    lat = data["lattice"]
    host = LatticeSpec(lat["dimension"], lat["length"], lat["branching"],
                       lat["layers"], lat["boundary"])
    site_of = {nid: tuple(site) for nid, site in data["sites"]}
    offsets = data.get("offsets")
    if offsets is not None:
        offsets = {v: tuple(m) for v, m in offsets.items()}
    p = Placement(data["scheme"], host, data["delta_tau"], site_of,
                  frozenset(n.id for n in tns.anchors()), offsets)
    chains = {lid: tuple(tuple(v) for v in chain)
              for lid, chain in data["paths"]}
    info = {}
    apex = _apex_isometries(tns)
    for line in tns.lines:
        if line.id in chains:
            src, dst = _orient(tns, line)
            _, axis = _route_one(tns, p, apex, src, dst, site_of[src],
                                 site_of[dst])
            info[line.id] = (src, dst, axis)
    return p, PathAssignment(chains, info)
