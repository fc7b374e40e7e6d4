"""Command line front end: build networks, map them onto lattices, verify
embeddings, scan entropies, and render placements as SVG.

Exit codes: 0 success, 2 invalid arguments, 3 resource limit, 4
verification or cross-check failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import dense, mapping, qca, stabilizer, tns as tns_mod
from .dense import ResourceLimitError
from .tns import GENERATOR_VERSION

_BUILDERS = {
    "mera1d": lambda a: tns_mod.build_mera_1d(a.layers, a.chi, a.phys_dim,
                                              a.seed, not a.no_elements),
    "mera2d-b2": lambda a: tns_mod.build_mera_2d_b2(a.layers, a.chi,
                                                    a.phys_dim, a.seed,
                                                    not a.no_elements),
    "mera2d-b3": lambda a: tns_mod.build_mera_2d_b3(a.layers, a.chi,
                                                    a.phys_dim, a.seed,
                                                    not a.no_elements),
    "ttn1d": lambda a: tns_mod.build_ttn_example(a.layers),
}


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def cmd_build(args) -> int:
    network = _BUILDERS[args.kind](args)
    _write(args.out, json.dumps(tns_mod.tns_to_dict(network)) + "\n")
    report = tns_mod.validate_preconditions(network)
    spec = network.spec
    print(f"built {args.kind}: {spec.dimension}D L={spec.length} "
          f"layers={spec.layers} nodes={len(network.nodes)} "
          f"lines={len(network.lines)} preconditions="
          f"{'ok' if report.ok else 'VIOLATED'}")
    if not report.ok:
        for issue in report.issues:
            print(f"  {issue}", file=sys.stderr)
        return 4
    return 0


def _place(network, scheme, delta_tau):
    if scheme == "naive":
        return mapping.place_naive(network)
    if scheme == "shifted":
        return mapping.place_shifted(network)
    return mapping.place_refined(network, delta_tau)


def cmd_map(args) -> int:
    network = tns_mod.tns_from_dict(_load_json(args.tns))
    placement = _place(network, args.scheme, args.delta_tau)
    paths = mapping.route_lines(network, placement)
    report = mapping.measured_chi(network, paths)
    _write(args.out_prefix + ".map.json",
           json.dumps(mapping.map_to_dict(placement, paths)) + "\n")
    _write(args.out_prefix + ".congestion.csv",
           mapping.congestion_csv(report))

    stacks = mapping.detect_stacks(placement)
    bound = mapping.chi_bound(network.meta, network.spec.dimension)
    log_all = report.log_chi_peps(network.meta.chi)
    log_int = report.log_chi_peps(network.meta.chi, include_physical=False)
    print(f"scheme: {args.scheme} (host L={placement.lattice.length}, "
          f"refine {placement.refine_factor})")
    print(f"max stack height: {stacks.max_height}")
    print(f"paths per edge: max {report.max_paths()} "
          f"(interior {report.max_paths(include_physical=False)})")
    print(f"chi_peps: {report.chi_peps()} (log_chi {log_all:.3f}); "
          f"interior {report.chi_peps(include_physical=False)} "
          f"(log_chi {log_int:.3f})")
    print(f"log-chi bound: {bound}; measured within bound: "
          f"{'yes' if log_all <= bound else 'NO'}")
    return 0


def cmd_verify(args) -> int:
    network = tns_mod.tns_from_dict(_load_json(args.tns))
    data = _load_json(args.map)
    placement, paths = mapping.map_from_dict(data, network)

    if set(placement.site_of) != set(network.nodes):
        print("structural error: map sites do not cover the network nodes")
        return 4
    try:
        expected = _place(network, placement.scheme, placement.delta_tau or 1) \
            if placement.scheme in ("naive", "shifted", "refined") else None
    except ValueError:
        expected = None
    if expected is not None and expected.site_of != placement.site_of:
        print("structural error: site positions do not match the scheme")
        return 4
    if set(paths.chains) != {ln.id for ln in network.lines}:
        print("structural error: paths do not cover the contraction lines")
        return 4
    for line in network.lines:
        chain = paths.chains[line.id]
        src, dst = paths.info[line.id][0], paths.info[line.id][1]
        if chain[0] != placement.site_of[src] \
                or chain[-1] != placement.site_of[dst]:
            print(f"structural error: path of line {line.id} does not join "
                  f"its endpoints")
            return 4
        for a, b in zip(chain, chain[1:]):
            if sum(abs(x - y) for x, y in zip(a, b)) != 1:
                print(f"structural error: path of line {line.id} jumps")
                return 4

    peps = mapping.assemble_peps(network, placement, paths)
    reference = dense.contract_to_statevector(network)
    embedded = dense.contract_to_statevector(peps)
    if dense.states_equal(reference, embedded, tol=args.tol):
        print(f"PASS embedded state matches (chi_peps {peps.chi_peps})")
        return 0
    print("FAIL embedded state differs from the network state")
    return 4


def _entropy_ttn(args):
    rows = ["T,L,cut_size,S"]
    for layers in range(1, args.layers_max + 1, 2):
        run = stabilizer.run_ttn_example(layers)
        rows.append(f"{layers},{2 ** layers},{len(run.region)},{run.entropy}")
    return rows, 0


def _entropy_qca(args):
    lengths = [int(x) for x in args.lengths.split(",") if x]
    rows_data = []
    code = 0
    for length in lengths:
        ps0 = qca.initial_pairs(args.dimension, length)
        for layers in range(1, args.layers_max + 1):
            ps = qca.evolve(ps0, layers)
            if args.cut == "half":
                cuts = [("half", qca.half_cut_region(args.dimension, length))]
            else:
                rng = np.random.default_rng(args.seed + length + 97 * layers)
                cuts = [(f"rand{i}",
                         qca.random_connected_region(args.dimension, length,
                                                     rng))
                        for i in range(args.cuts)]
            for cut_id, region in cuts:
                s = qca.entropy_across(ps, region)
                rows_data.append((args.dimension, length, layers, cut_id, s))
                if args.cross_check:
                    state = stabilizer.run_qca(args.dimension, length, layers)
                    s2 = stabilizer.entanglement_entropy(
                        state, stabilizer.region_qubits(region, length))
                    if s2 != s:
                        print(f"cross-check FAILED at L={length} T={layers} "
                              f"{cut_id}: pair count {s}, stabilizer {s2}",
                              file=sys.stderr)
                        code = 4
    half_rows = [(l, t, s) for d, l, t, c, s in rows_data if c == "half"]
    if half_rows:
        c_fit = sum(s / (l ** (args.dimension - 1) * t)
                    for l, t, s in half_rows) / len(half_rows)
    else:
        c_fit = 0.0
    rows = ["D,L,T,cut_id,S,predicted"]
    for d, l, t, cut_id, s in rows_data:
        pred = c_fit * l ** (d - 1) * t
        rows.append(f"{d},{l},{t},{cut_id},{s},{pred:.6f}")
    if args.cross_check and code == 0:
        print("cross-check: pair tracker and stabilizer agree on all rows",
              file=sys.stderr)
    return rows, code


def cmd_entropy(args) -> int:
    rows, code = (_entropy_ttn(args) if args.family == "ttn1d"
                  else _entropy_qca(args))
    _write(args.out, "\n".join(rows) + "\n")
    return code


_MARKER_STYLE = {
    "u": ("circle", "#cc6677"), "u2x2": ("circle", "#cc6677"),
    "u2x1": ("circle", "#ddaa33"), "u1x2": ("circle", "#88ccee"),
    "g": ("circle", "#cc6677"), "w": ("square", "#4477aa"),
    "t": ("diamond", "#117733"), "p": ("dot", "#555555"),
}


def cmd_render(args) -> int:
    data = _load_json(args.map)
    lat = data["lattice"]
    dim = lat["dimension"]
    if dim > 2:
        raise ValueError("rendering supports 1 and 2 dimensions")
    length = lat["length"]
    scale, margin = 28, 30

    def xy(site):
        x = site[0]
        y = site[1] if dim == 2 else 0
        return margin + scale * x, margin + scale * y

    width = margin * 2 + scale * (length - 1)
    height = margin * 2 + scale * ((length - 1) if dim == 2 else 0)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f"<!-- generated by {GENERATOR_VERSION} -->",
        f'<rect width="{width}" height="{height}" fill="#fdfdfb"/>',
    ]
    for x in range(length):
        for y in range(length if dim == 2 else 1):
            px, py = xy((x, y))
            parts.append(f'<circle cx="{px}" cy="{py}" r="1.5" '
                         f'fill="#cccccc"/>')
    for lid, chain in sorted(data["paths"]):
        if len(chain) < 2:
            continue
        pts = " ".join("{},{}".format(*xy(v)) for v in chain)
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="#4477aa" stroke-width="2" opacity="0.35">'
                     f'<title>line {lid}</title></polyline>')
    by_site: dict[tuple, list[str]] = {}
    for nid, site in sorted(data["sites"]):
        by_site.setdefault(tuple(site), []).append(nid)
    for site in sorted(by_site):
        for i, nid in enumerate(by_site[site]):
            shape, color = _MARKER_STYLE.get(nid.split(":")[0],
                                             ("circle", "#999999"))
            px, py = xy(site)
            px, py = px + 3 * i, py - 3 * i
            title = f"<title>{nid}</title>"
            if shape == "square":
                parts.append(f'<rect x="{px - 6}" y="{py - 6}" width="12" '
                             f'height="12" fill="{color}">{title}</rect>')
            elif shape == "diamond":
                parts.append(f'<rect x="{px - 5}" y="{py - 5}" width="10" '
                             f'height="10" fill="{color}" transform='
                             f'"rotate(45 {px} {py})">{title}</rect>')
            elif shape == "dot":
                parts.append(f'<circle cx="{px}" cy="{py}" r="2.5" '
                             f'fill="{color}">{title}</circle>')
            else:
                parts.append(f'<circle cx="{px}" cy="{py}" r="7" '
                             f'fill="{color}">{title}</circle>')
    parts.append("</svg>")
    _write(args.out, "\n".join(parts) + "\n")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="tnkit",
        description="hierarchical tensor networks on scale lattices")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build a network and write tns-v1 JSON")
    b.add_argument("--kind", required=True, choices=sorted(_BUILDERS))
    b.add_argument("--layers", type=int, required=True)
    b.add_argument("--chi", type=int, default=2)
    b.add_argument("--phys-dim", type=int, default=2)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--no-elements", action="store_true")
    b.add_argument("--out", default="-")
    b.set_defaults(func=cmd_build)

    m = sub.add_parser("map", help="place and route a network")
    m.add_argument("--tns", required=True)
    m.add_argument("--scheme", required=True,
                   choices=("naive", "shifted", "refined"))
    m.add_argument("--delta-tau", type=int, default=1)
    m.add_argument("--out-prefix", required=True)
    m.set_defaults(func=cmd_map)

    v = sub.add_parser("verify", help="check an embedding against its network")
    v.add_argument("--tns", required=True)
    v.add_argument("--map", required=True)
    v.add_argument("--tol", type=float, default=1e-10)
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("entropy", help="entropy scans as CSV")
    e.add_argument("--family", required=True, choices=("ttn1d", "qca"))
    e.add_argument("--layers-max", type=int, default=5)
    e.add_argument("--dimension", type=int, default=2, choices=(1, 2))
    e.add_argument("--lengths", default="12,16,20")
    e.add_argument("--cut", default="half", choices=("half", "random"))
    e.add_argument("--cuts", type=int, default=3)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--cross-check", action="store_true")
    e.add_argument("--out", default="-")
    e.set_defaults(func=cmd_entropy)

    r = sub.add_parser("render", help="draw a placement as SVG")
    r.add_argument("--map", required=True)
    r.add_argument("--out", default="-")
    r.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
