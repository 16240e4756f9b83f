"""Command-line front end: simulations, checks, constants, tree tables and verification suites."""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["algebra", "N", "T", "eps", "C_mode", "seed"],
    "additionalProperties": False,
    "properties": {
        "algebra": {"enum": ["su2", "su3", "abelian-test"]},
        "N": {"type": "integer", "minimum": 8},
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "eps": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "mollifier": {"enum": ["symmetric", "nonanticipative"]},
        "C_mode": {"type": "string", "pattern": r"^(zero|csym|custom:[-+0-9.eE]+)$"},
        "constants": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "noise": {"type": "boolean"},
        "initial": {
            "oneOf": [
                {"const": "zero"},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"const": "trig"},
                        "seed": {"type": "integer", "minimum": 0},
                        "amplitude": {"type": "number", "minimum": 0},
                        "kmax": {"type": "integer", "minimum": 0},
                    },
                },
            ]
        },
        "observables": {"type": "array", "items": {"type": "string"}},
        "record_every": {"type": "integer", "minimum": 1},
        "blowup": {"type": "number", "exclusiveMinimum": 0},
    },
}


class ConfigError(ValueError):
    pass


def fmt(x):
    """Floats with 17 significant digits, everything else as is."""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(x) for x in r])


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def save_figure(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=100, metadata={"Software": None})
    _plt().close(fig)


# ---------------------------------------------------------------------------
# config


def load_config(path):
    import jsonschema

    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config {path}: {where}: {e.message}") from e
    N = cfg["N"]
    if cfg.get("dt", 0) > 1.0 / N**2:
        raise ConfigError(f"config {path}: dt must be at most a^2 = {1.0 / N**2:.6g}")
    return cfg


def resolve_C(cfg, config_dir="."):
    """Renormalisation constant C and the constants record it came from."""
    from .lie import NotSimpleError, casimir_lambda, get_algebra
    from .renorm import RenormConstants

    mode = cfg["C_mode"]
    if mode == "zero":
        return 0.0, None
    if mode.startswith("custom:"):
        try:
            return float(mode.split(":", 1)[1]), None
        except ValueError as e:
            raise ConfigError(f"C_mode {mode!r}: cannot parse the value") from e
    path = cfg.get("constants")
    if not path:
        raise ConfigError(
            "C_mode=csym needs a constants file: run `ymflow renorm-constants --eps "
            f"{cfg['eps']} --mollifier {cfg.get('mollifier', 'symmetric')} --out constants.json` "
            'and add "constants": "constants.json" to the config'
        )
    full = Path(config_dir) / path
    if not full.exists():
        raise ConfigError(
            f"constants file {full} not found: create it with `ymflow renorm-constants --eps {cfg['eps']} "
            f"--mollifier {cfg.get('mollifier', 'symmetric')} --out {full}`"
        )
    consts = RenormConstants.load(full)
    if abs(consts.eps - cfg["eps"]) > 1e-12 * cfg["eps"]:
        raise ConfigError(f"constants file {full} is for eps = {consts.eps}, config has eps = {cfg['eps']}; regenerate it")
    try:
        lam, _ = casimir_lambda(get_algebra(cfg["algebra"]))
    except NotSimpleError as e:
        raise ConfigError(f"C_mode=csym needs a simple algebra: {e}") from e
    return lam * consts.csym_eps, consts


def _parse_loop(spec):
    from .oneform import circle, rectangle

    kind, _, rest = spec.partition(":")
    vals = [float(v) for v in rest.split(",")] if rest else []
    if kind == "rect" and len(vals) == 4:
        return rectangle((vals[0], vals[1]), vals[2], vals[3])
    if kind == "circle" and len(vals) == 3:
        return circle((vals[0], vals[1]), vals[2])
    raise ConfigError(f"bad loop {spec!r}: use rect:x,y,w,h or circle:x,y,r")


def build_observables(names, N, algebra):
    from .gauge import wilson_loop
    from .lie import get_algebra
    from .oneform import LatticeGaugeField, SampleFamily, embed_lattice, norm_alpha
    from .spde import OBSERVABLES

    out = {}
    fam = None
    for name in names:
        if name in OBSERVABLES:
            out[name] = OBSERVABLES[name]
        elif name.startswith("wilson:"):
            loop = _parse_loop(name[len("wilson:"):])
            out[name] = lambda A, alg, a, loop=loop: wilson_loop(
                embed_lattice(LatticeGaugeField(A, algebra)), loop, 1.0 / (4 * N), get_algebra(algebra)
            )
        elif name.startswith("norm:alpha:"):
            alpha = float(name.rsplit(":", 1)[1])
            fam = fam or SampleFamily(per_level=4)
            out[name] = lambda A, alg, a, alpha=alpha: norm_alpha(embed_lattice(LatticeGaugeField(A, algebra)), alpha, fam).value
        else:
            raise ConfigError(
                f"unknown observable {name!r}: use {', '.join(sorted(OBSERVABLES))}, wilson:rect:x,y,w,h, "
                "wilson:circle:x,y,r or norm:alpha:<value>"
            )
    return out


def _initial(cfg):
    from .lie import get_algebra
    from .oneform import LatticeGaugeField, random_trig_form

    N, algebra = cfg["N"], cfg["algebra"]
    init = cfg.get("initial", "zero")
    if init == "zero":
        return LatticeGaugeField.zeros(N, algebra)
    rng = np.random.default_rng(init.get("seed", cfg["seed"]))
    f = random_trig_form(rng, get_algebra(algebra), kmax=init.get("kmax", 2), amplitude=init.get("amplitude", 0.3))
    return f.lattice(N, algebra)


def fingerprint(obj):
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args):
    from dataclasses import asdict

    from .lie import get_algebra
    from .mollifier import MollifierSpec
    from .she import MollifiedNoise
    from .spde import DEFAULT_BLOWUP, SymState, run_sym

    cfg = load_config(args.config)
    C, consts = resolve_C(cfg, Path(args.config).parent)
    N, algebra = cfg["N"], cfg["algebra"]
    alg = get_algebra(algebra)
    dt = cfg.get("dt", (1.0 / N) ** 2 / 4)
    obs = build_observables(cfg.get("observables", ["l2_norm"]), N, algebra)
    state = SymState(_initial(cfg), eps=cfg["eps"], dt=dt, C=C)
    noise = None
    if cfg.get("noise", True):
        chi = MollifierSpec(cfg.get("mollifier", "symmetric"))
        noise = MollifiedNoise(cfg["seed"], cfg["eps"], chi, N, dt, alg)
    res = run_sym(state, cfg["T"], noise, obs, cfg.get("record_every", 1), cfg.get("blowup", DEFAULT_BLOWUP))

    out = Path(args.out)
    stem = out.with_suffix("")
    rows = []
    for t, A in res.trajectory:
        idx = np.indices(A.shape).reshape(4, -1).T
        for (i, n1, n2, a_), v in zip(idx, A.ravel()):
            rows.append((float(t), int(i) + 1, int(n1), int(n2), int(a_), float(v)))
    write_csv(out, ["t", "component", "n1", "n2", "basis", "value"], rows)
    names = list(obs)
    write_csv(f"{stem}_observables.csv", ["t"] + names, [[t] + [res.observables[k][j] for k in names] for j, t in enumerate(res.times)])
    prov = {
        "config": cfg,
        "C": C,
        "eps": cfg["eps"],
        "dt": dt,
        "seed": cfg["seed"],
        "constants": asdict(consts) if consts else None,
        "blowup": res.blowup,
        "steps": res.final.step,
        "version": __version__,
        "numpy": np.__version__,
    }
    prov["fingerprint"] = fingerprint(prov)
    write_json(f"{stem}_provenance.json", prov)
    if args.figure:
        plt = _plt()
        fig, ax = plt.subplots(figsize=(6, 4))
        for k in names:
            ax.plot(res.times, res.observables[k], label=k)
        ax.set_xlabel("t")
        ax.legend()
        save_figure(fig, args.figure)
    if res.blowup:
        print(f"blow-up detected at t = {res.blowup['t']:.6g}; trajectory truncated", file=sys.stderr)
    return 0


def cmd_wilson(args):
    from .gauge import GaugeTransform, GaugedSegmentFunction, wilson_loop
    from .lie import get_algebra
    from .oneform import embed_lattice, random_trig_form

    alg = get_algebra(args.algebra)
    f = random_trig_form(np.random.default_rng(args.seed), alg, kmax=args.kmax, amplitude=args.amplitude)
    A = embed_lattice(f.lattice(args.N, args.algebra))
    fields = [("", A)]
    if args.gauge_seed is not None:
        ph = random_trig_form(np.random.default_rng(args.gauge_seed), alg, kmax=1, amplitude=args.amplitude)
        g = GaugeTransform.from_function(lambda p: ph.values(p)[:, 0, :], args.N, args.algebra)
        fields.append(("/gauged", GaugedSegmentFunction(A, g)))
    loops = args.loop or ["rect:0.1,0.05,0.2,0.15", "circle:0,0,0.1"]
    rows = []
    for j, spec in enumerate(loops):
        loop = _parse_loop(spec)
        P = loop(loop.points(args.mesh))
        area = 0.5 * abs(float(np.sum(P[:-1, 0] * P[1:, 1] - P[1:, 0] * P[:-1, 1])))
        for suffix, F in fields:
            rows.append((f"{j}:{spec}{suffix}", area, wilson_loop(F, loop, args.mesh, alg), args.mesh, args.N))
    write_csv(args.out, ["loop_id", "area", "W_value", "mesh", "N"], rows)
    return 0


def cmd_norm_estimate(args):
    from .lie import get_algebra
    from .oneform import NORMS, SampleFamily, embed_lattice, random_trig_form

    f = random_trig_form(np.random.default_rng(args.seed), get_algebra(args.algebra), kmax=args.kmax, amplitude=args.amplitude)
    A = embed_lattice(f.lattice(args.N, args.algebra))
    fam = SampleFamily(seed=args.seed)
    rows = []
    for alpha in args.alpha:
        for name in args.norms:
            est = NORMS[name](A, alpha, fam)
            rows.append((name, float(alpha), est.value, est.n_samples, ";".join(fmt(float(w)) for w in est.witness)))
    write_csv(args.out, ["norm_name", "alpha", "value", "n_samples", "witness_coords"], rows)
    return 0


def _she_rows(probes):
    return [(p.shape_id, p.t, p.size, p.mc_estimate, p.oracle, p.bound_rhs, p.passed) for p in probes]


def _she_figure(probes, path):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5, 5))
    o = np.array([p.oracle for p in probes])
    m = np.array([p.mc_estimate for p in probes])
    e = np.array([p.stderr for p in probes])
    ax.errorbar(o, m, yerr=3 * e, fmt="o", ms=3)
    lim = [o.min() * 0.8, o.max() * 1.2]
    ax.plot(lim, lim, "k--", lw=0.8)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("Fourier oracle")
    ax.set_ylabel("Monte Carlo (3 s.e.)")
    save_figure(fig, path)


def cmd_she_check(args):
    from .she import check_probes, default_probes

    probes = check_probes(default_probes(args.seed, args.n_t, args.per_t), args.replicas, args.K, args.seed, kappa=args.kappa)
    write_csv(args.out, ["shape_id", "t", "size", "mc_estimate", "oracle", "bound_rhs", "pass"], _she_rows(probes))
    if args.figure:
        _she_figure(probes, args.figure)
    n_ok = sum(p.passed for p in probes)
    print(f"{n_ok}/{len(probes)} probes within 3 standard errors")
    return 0


def cmd_deturck_check(args):
    from .spde import deturck_convergence

    st = deturck_convergence(tuple(args.N), args.T, args.seed)
    orders = [float("nan")] + st.orders
    write_csv(args.out, ["N", "T", "gap", "observed_order"], [(n, args.T, g, o) for n, g, o in zip(st.Ns, st.gaps, orders)])
    print(f"minimum observed order {st.min_order:.3f}")
    return 0


def cmd_renorm_constants(args):
    from .lie import get_algebra, casimir_lambda
    from .mollifier import MollifierSpec
    from .renorm import compute_constants

    lam = casimir_lambda(get_algebra(args.algebra))[0] if args.algebra else None
    c = compute_constants(args.eps, MollifierSpec(args.mollifier), alg_lambda=lam)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(c.to_json() + "\n")
    return 0


def cmd_trees(args):
    from .trees import counterterm_gauge_system, counterterm_sym, enumerate_trees, get_rule
    from .trees.labels import Deg

    if args.trees_cmd == "enumerate":
        rule = get_rule(args.rule)
        trees = enumerate_trees(rule, Deg.parse(args.deg_bound))
        payload = {"rule": args.rule, "deg_bound": args.deg_bound, "trees": [t.to_json() for t in trees]}
        write_json(args.out, payload)
        print(f"{len(trees)} trees")
        return 0
    from .renorm import RenormConstants

    if not Path(args.constants).exists():
        raise ConfigError(f"constants file {args.constants} not found: create it with `ymflow renorm-constants --eps <eps> --out {args.constants}`")
    consts = RenormConstants.load(args.constants)
    if args.rule == "sym":
        results = {"sym": counterterm_sym(consts)}
        tol = 1e-10
    else:
        results = {s: counterterm_gauge_system(consts, s) for s in ("B", "Abar")}
        tol = 1e-8
    report = {
        name: {
            "residual": r.residual,
            "uncovered": [list(u) for u in r.uncovered],
            "values": {k: np.asarray(v).tolist() for k, v in r.values.items()},
            "pass": r.ok(tol),
        }
        for name, r in results.items()
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    if args.check and not all(v["pass"] for v in report.values()):
        return 1
    return 0


def _suite_figure(res, path):
    plt = _plt()
    if res.suite == "she":
        _she_figure(res.data["probes"], path)
        return
    fig, ax = plt.subplots(figsize=(6, 4))
    if res.suite == "deturck":
        st = res.data["study"]
        ax.loglog(st.Ns, st.gaps, "o-", label="sup |A^g - B|")
        ax.loglog(st.Ns, st.gaps[0] * (np.array(st.Ns) / st.Ns[0]) ** -1.0, "k--", label="order 1")
        ax.set_xlabel("N")
        ax.legend()
    elif res.suite == "norms":
        ax.plot(res.data["ratios"], "o")
        ax.axhline(16, color="k", ls="--")
        ax.axhline(1 / 16, color="k", ls="--")
        ax.set_yscale("log")
        ax.set_ylabel("(gr + tri) / alpha")
    elif res.suite == "renorm":
        cb = res.data["cbar"]
        ax.plot(range(3, 3 + len(cb) - 1), np.diff(cb), "o-")
        ax.axhline(np.log(2) / (4 * np.pi), color="k", ls="--")
        ax.set_xlabel("k (eps = 2^-k)")
        ax.set_ylabel("cbar(eps) - cbar(2 eps)")
    else:
        names = [c.name for c in res.checks]
        ax.barh(range(len(names)), [1.0 if c.passed else 0.0 for c in res.checks])
        ax.set_yticks(range(len(names)))
        ax.set_yticklabels(names, fontsize=6)
        ax.set_xlabel("pass")
    fig.tight_layout()
    save_figure(fig, path)


def cmd_verify(args):
    from .suites import run_suite

    res = run_suite(args.suite)
    print(json.dumps(res.to_json(), indent=2))
    if args.report:
        d = Path(args.report)
        write_csv(d / f"{args.suite}.csv", ["check", "value", "limit", "kind", "pass"],
                  [(c.name, _num(c.value), _num(c.limit), c.kind, c.passed) for c in res.checks])
        _suite_figure(res, d / f"{args.suite}.png")
    return 0 if res.passed else 1


def _num(x):
    if isinstance(x, (tuple, list)):
        return ";".join(fmt(float(v)) for v in x)
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    return float(x)


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="ymflow", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("simulate", help="run the renormalised flow from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True, help="trajectory CSV; observables and provenance go next to it")
    s.add_argument("--figure", help="optional PNG of the observables")
    s.set_defaults(func=cmd_simulate)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--N", type=int, default=64)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--algebra", default="su2", choices=["su2", "su3", "abelian-test"])
    common.add_argument("--kmax", type=int, default=2)
    common.add_argument("--amplitude", type=float, default=0.2)

    s = sub.add_parser("wilson", parents=[common], help="Wilson loops of a random smooth field")
    s.add_argument("--loop", action="append", help="rect:x,y,w,h or circle:x,y,r (repeatable)")
    s.add_argument("--mesh", type=float, default=1 / 256)
    s.add_argument("--gauge-seed", type=int, help="also evaluate the field gauge-transformed by a random g")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_wilson)

    s = sub.add_parser("norm-estimate", parents=[common], help="sampled norms of a random smooth field")
    s.add_argument("--alpha", type=float, action="append", default=None)
    s.add_argument("--norms", nargs="+", default=["gr", "alpha", "vee", "tri"], choices=["gr", "alpha", "vee", "tri"])
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_norm_estimate)

    s = sub.add_parser("she-check", help="Monte Carlo vs Fourier oracle for the stochastic heat equation")
    s.add_argument("--replicas", type=int, default=10_000)
    s.add_argument("--K", type=int, default=128)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n-t", type=int, default=4)
    s.add_argument("--per-t", type=int, default=5)
    s.add_argument("--kappa", type=float, default=0.4)
    s.add_argument("--out", required=True)
    s.add_argument("--figure")
    s.set_defaults(func=cmd_she_check)

    s = sub.add_parser("deturck-check", help="pathwise DeTurck consistency under grid refinement")
    s.add_argument("--N", type=int, nargs="+", default=[32, 64, 128])
    s.add_argument("--T", type=float, default=0.01)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_deturck_check)

    s = sub.add_parser("renorm-constants", help="compute the renormalisation constants for one eps")
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--mollifier", default="symmetric", choices=["symmetric", "nonanticipative"])
    s.add_argument("--algebra", default=None, help="record lambda of this algebra")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_renorm_constants)

    s = sub.add_parser("trees", help="tree enumeration and counterterm assembly")
    tsub = s.add_subparsers(dest="trees_cmd", required=True)
    e = tsub.add_parser("enumerate")
    e.add_argument("--rule", default="sym", choices=["sym", "gauge"])
    e.add_argument("--deg-bound", default="0")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_trees)
    c = tsub.add_parser("counterterm")
    c.add_argument("--rule", default="sym", choices=["sym", "gauge"])
    c.add_argument("--constants", required=True)
    c.add_argument("--check", action="store_true", help="exit 1 unless the identities hold")
    c.set_defaults(func=cmd_trees)

    from .suites import SUITES

    s = sub.add_parser("verify", help="run an acceptance suite and print pass/fail per check")
    s.add_argument("suite", choices=list(SUITES))
    s.add_argument("--report", help="directory for a CSV and a PNG of the suite")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    if os.environ.get("YMFLOW_THREADS"):
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, os.environ["YMFLOW_THREADS"])
    args = build_parser().parse_args(argv)
    if getattr(args, "alpha", "x") is None:
        args.alpha = [0.75]
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
