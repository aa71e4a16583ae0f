"""Command-line front end.

Every run is determined by (resolved config, seed). Reports embed the
resolved configuration; JSON uses sorted keys so identical runs are byte
identical (pass --no-timestamp to drop the one volatile field). Config files
are INI: a [common] section plus one section per subcommand; command-line
flags win over file values, which win over defaults.

Exit status: 0 success, 1 invalid input or violated precondition, 2 internal
inconsistency or numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime
import itertools
import json
import os
import sys

import numpy as np

from . import __version__
from .boxnorm import box_norm
from .conditions import (CorrelationSpec, LinearFormFamily, ThetaSystem,
                         euler_factor_identity_check, tau_moments,
                         verify_correlation, verify_linear_forms,
                         verify_local_factor_cases)
from .counting import find_constellations, run_pipeline, von_neumann_probe
from .dual import dual_function, pairing, qap_probe
from .errors import (ConstlabError, InternalInconsistencyError,
                     InvalidInputError, NumericalFailureError,
                     PreconditionError)
from .gridfn import GridFunction, load as load_grid, save as save_grid, tensor
from .lattice import (Basis, derived_basis, is_general_position,
                      lift_to_general_position, parse_basis_file,
                      primitive_part, segment_geometry)
from .rng import substream
from .sieve import (SieveCache, green_tao_nu, is_prime, majorization_check,
                    make_measure_params, prime_table)

_GRID_CAP = 4_000_000


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write("error: %s\n" % message)
        raise SystemExit(1)


def _parse_vectors(text: str) -> tuple:
    rows = []
    for part in text.replace("|", ";").split(";"):
        part = part.strip()
        if not part:
            continue
        try:
            rows.append(tuple(int(c) for c in part.replace(" ", ",").split(",")
                              if c != ""))
        except ValueError:
            raise InvalidInputError("bad vector component in %r" % part)
    if not rows:
        raise InvalidInputError("no vectors in %r" % text)
    return tuple(rows)


def _parse_int_list(text: str) -> list:
    try:
        return [int(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise InvalidInputError("bad integer list %r" % text)


def _identity_vectors(d: int) -> tuple:
    return tuple(tuple(1 if i == j else 0 for j in range(d))
                 for i in range(d))


class _Resolver:
    """CLI flag > config-file value > default."""

    def __init__(self, args, command: str):
        self.args = args
        self.file = configparser.ConfigParser()
        if getattr(args, "config", None):
            read = self.file.read(args.config)
            if not read:
                raise InvalidInputError("config file %r unreadable"
                                        % args.config)
        self.sections = [command, "common"]
        self.resolved = {}

    def get(self, name: str, default=None, cast=str):
        cli = getattr(self.args, name.replace("-", "_"), None)
        if cli is not None:
            val = cli
        else:
            val = None
            for sec in self.sections:
                if self.file.has_option(sec, name):
                    raw = self.file.get(sec, name)
                    if cast is bool:
                        val = raw.strip().lower() in ("1", "true", "yes", "on")
                    else:
                        val = cast(raw)
                    break
            if val is None:
                val = default
        if val is not None and cast in (int, float) and not isinstance(
                val, cast):
            val = cast(val)
        self.resolved[name] = val
        return val


def _cache_from(res: _Resolver) -> SieveCache:
    path = res.get("cache-dir", os.environ.get("CONSTLAB_CACHE_DIR"))
    return SieveCache(path)


def _probe_function(res: _Resolver, N: int, d: int, seed: int) -> GridFunction:
    gridfile = res.get("grid")
    if gridfile:
        f = load_grid(gridfile)
        if f.N != N or f.d != d:
            raise InvalidInputError("grid file shape (%d, %d) does not match "
                                    "(%d, %d)" % (f.N, f.d, N, d))
        return f
    rng = substream(seed, "cli-probe")
    return GridFunction(N, d, 2.0 * rng.random((N,) * d) - 1.0)


def _measure_mu(res: _Resolver, N: int, d: int, cache) -> GridFunction:
    """Tensor power of the one-dimensional window measure."""
    if N ** d > _GRID_CAP:
        raise InvalidInputError("N^d too large to hold the measure grid")
    params = _measure_params(res, N, d)
    nu = green_tao_nu(params, cache)
    return tensor([nu] * d)


def _measure_params(res: _Resolver, N: int, d: int):
    return make_measure_params(
        N, d,
        w=res.get("w", None, int),
        b=res.get("b", 1, int),
        R=res.get("R", None, float),
        eps1=res.get("eps1", 0.1, float),
        eps2=res.get("eps2", 0.9, float))


def _report_stem(out: str) -> str:
    return out[:-5] if out.endswith(".json") else out


def _write_reports(out: str, report: dict, csv_header, csv_rows,
                   no_timestamp: bool) -> None:
    meta = {"version": __version__}
    if not no_timestamp:
        meta["timestamp"] = datetime.datetime.now(
            datetime.timezone.utc).isoformat()
    report = dict(report)
    report["meta"] = meta
    stem = _report_stem(out)
    with open(stem + ".json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(stem + ".csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_header)
        for row in csv_rows:
            writer.writerow(row)


def _kv_rows(d: dict, prefix=""):
    rows = []
    for k in sorted(d):
        v = d[k]
        key = prefix + k
        if isinstance(v, dict):
            rows.extend(_kv_rows(v, key + "."))
        elif isinstance(v, (list, tuple)):
            rows.append((key, json.dumps(v)))
        else:
            rows.append((key, v))
    return rows


# ---------------------------------------------------------------------------
# subcommand handlers; each returns (report_dict, csv_header, csv_rows)
# ---------------------------------------------------------------------------

def _cmd_geometry(res: _Resolver):
    basis_file = res.get("basis-file")
    modulus = res.get("modulus", None, int)
    if basis_file:
        basis = parse_basis_file(basis_file)
        vectors, modulus = basis.vectors, basis.modulus
    else:
        vectors = _parse_vectors(res.get("vectors", "1,2;2,1"))
    flat = tuple(c for v in vectors for c in v)
    geom = segment_geometry(flat)
    scale, prim = primitive_part(flat)
    gp = is_general_position(vectors, modulus)
    report = {
        "command": "geometry",
        "config": {"vectors": [list(v) for v in vectors], "modulus": modulus},
        "general_position": gp,
        "tau": {"num": geom.tau.numerator, "den": geom.tau.denominator,
                "float": float(geom.tau)},
        "primitive": geom.primitive,
        "scale": scale,
    }
    d = len(vectors[0])
    if modulus is not None and len(vectors) == d and gp:
        b = Basis(vectors, modulus)
        db = derived_basis(b)
        report["derived_vectors"] = [list(v) for v in db.vectors]
        report["derived_general_position"] = is_general_position(db.vectors)
    if res.get("lift", False, bool):
        lifted, chosen = lift_to_general_position(vectors, modulus)
        report["lifted_vectors"] = [list(v) for v in lifted]
        report["lift_modulus"] = chosen
        report["lifted_general_position"] = is_general_position(lifted)
    return report, ("key", "value"), _kv_rows(report)


def _cmd_boxnorm(res: _Resolver, seed: int, samples: int):
    N = res.get("modulus", 7, int)
    d = res.get("dim", 2, int)
    vtext = res.get("vectors")
    vectors = _parse_vectors(vtext) if vtext else _identity_vectors(d)
    basis = Basis(vectors, N)
    f = _probe_function(res, N, d, seed)
    strategy = res.get("strategy", "factored")
    norm = box_norm(f, basis, strategy=strategy,
                    samples=samples, seed=seed)
    report = {
        "command": "boxnorm",
        "config": {"modulus": N, "dim": d,
                   "vectors": [list(v) for v in vectors],
                   "strategy": strategy, "seed": seed, "samples": samples},
        "box_norm": norm,
    }
    return report, ("key", "value"), _kv_rows(report)


def _cmd_dual(res: _Resolver, seed: int):
    N = res.get("modulus", 7, int)
    d = res.get("dim", 2, int)
    vtext = res.get("vectors")
    vectors = _parse_vectors(vtext) if vtext else _identity_vectors(d)
    basis = Basis(vectors, N)
    f = _probe_function(res, N, d, seed)
    df = dual_function(f, basis)
    nf = box_norm(f, basis)
    err = abs(pairing(f, df) - nf ** (2 ** d))
    out_grid = res.get("out-grid")
    if out_grid:
        save_grid(df, out_grid)
    report = {
        "command": "dual",
        "config": {"modulus": N, "dim": d,
                   "vectors": [list(v) for v in vectors], "seed": seed},
        "box_norm": nf,
        "pairing_identity_err": err,
        "dual_min": float(np.min(df.values)),
        "dual_max": float(np.max(df.values)),
        "dual_mean": float(df.expectation()),
        "dual_grid_written": bool(out_grid),
    }
    return report, ("key", "value"), _kv_rows(report)


def _cmd_qap(res: _Resolver, seed: int, cache):
    N = res.get("modulus", 31, int)
    d = res.get("dim", 2, int)
    vtext = res.get("vectors")
    vectors = _parse_vectors(vtext) if vtext else _identity_vectors(d)
    basis = Basis(vectors, N)
    probes = res.get("probes", 12, int)
    if res.get("with-measure", False, bool):
        mu = _measure_mu(res, N, d, cache)
    else:
        mu = GridFunction.constant(N, d, 1.0)
    rep = qap_probe(mu, basis, probes, seed)
    report = {
        "command": "qap",
        "config": {"modulus": N, "dim": d,
                   "vectors": [list(v) for v in vectors],
                   "probes": probes, "seed": seed,
                   "with_measure": res.resolved.get("with-measure", False)},
        "qap": json.loads(rep.to_json()),
    }
    rows = [(e, v, c) for (e, v, c) in rep.lower_curve]
    return report, ("eps", "min_pairing", "count"), rows


def _cmd_measure(res: _Resolver, cache):
    N = res.get("modulus", 1000, int)
    d = res.get("dim", 2, int)
    params = _measure_params(res, N, d)
    nu = green_tao_nu(params, cache)
    mean = float(nu.expectation())
    major = majorization_check(params, nu, cache)
    lo, hi = params.window
    off = np.concatenate([nu.values[:lo], nu.values[hi + 1:]])
    report = {
        "command": "measure",
        "config": {"modulus": N, "dim": d, "w": params.w, "W": params.W,
                   "b": params.b, "R": params.R, "eps1": params.eps1,
                   "eps2": params.eps2, "window": [lo, hi]},
        "mean_nu": mean,
        "mean_deviation": abs(mean - 1.0),
        "min_nu": float(np.min(nu.values)),
        "max_nu": float(np.max(nu.values)),
        "off_window_all_one": bool(off.size == 0 or
                                   (np.min(off) == 1.0 and np.max(off) == 1.0)),
        "majorization": major,
    }
    return report, ("key", "value"), _kv_rows(report)


def _cmd_linforms(res: _Resolver, seed: int, samples: int, cache):
    N = res.get("modulus", 1000, int)
    d = res.get("dim", 1, int)
    coeffs = _parse_vectors(res.get("coeffs", "1,0;1,1;1,2"))
    shifts = _parse_int_list(res.get("shifts", "0,0,0"))
    family = LinearFormFamily(coeffs=coeffs, shifts=tuple(shifts))
    if res.get("control", False, bool):
        nu = GridFunction.constant(N, 1, 1.0)
        config_measure = None
    else:
        params = _measure_params(res, N, d)
        nu = green_tao_nu(params, cache)
        config_measure = {"w": params.w, "b": params.b, "R": params.R,
                          "eps1": params.eps1, "eps2": params.eps2}
    est = verify_linear_forms(nu, family, samples=samples, seed=seed)
    report = {
        "command": "linforms",
        "config": {"modulus": N, "dim": d,
                   "coeffs": [list(r) for r in coeffs],
                   "shifts": shifts, "seed": seed, "samples": samples,
                   "control": res.resolved.get("control", False),
                   "measure": config_measure},
        "estimate": est.value,
        "stderr": est.stderr,
        "deviation": abs(est.value - 1.0),
        "exact": est.exact,
        "samples_used": est.samples,
    }
    return report, ("key", "value"), _kv_rows(report)


def _cmd_correlation(res: _Resolver, seed: int, samples: int, cache):
    N = res.get("modulus", 1000, int)
    d = res.get("dim", 1, int)
    forms = _parse_vectors(res.get("forms", "1"))
    shift_table = _parse_vectors(res.get("shift-table", "0,3"))
    spec = CorrelationSpec(
        forms=forms, shifts=shift_table,
        c1=res.get("c1", 1.0, float), c2=res.get("c2", 1.0, float),
        w=res.get("w", 2, int))
    params = _measure_params(res, N, d)
    nu = green_tao_nu(params, cache)
    rep = verify_correlation(nu, spec, samples=samples, seed=seed)
    moments = tau_moments(N, spec.w, spec.c1, spec.c2, ks=(1, 2, 4))
    report = {
        "command": "correlation",
        "config": {"modulus": N, "dim": d,
                   "forms": [list(r) for r in forms],
                   "shift_table": [list(r) for r in shift_table],
                   "c1": spec.c1, "c2": spec.c2, "w": spec.w,
                   "seed": seed, "samples": samples},
        "lhs": rep.lhs, "lhs_stderr": rep.lhs_stderr,
        "rhs": rep.rhs, "ratio": rep.ratio,
        "fitted_c1": rep.fitted_c1,
        "exact": rep.exact,
        "tau_moments": {str(k): v for k, v in moments.items()},
    }
    row = (rep.lhs, rep.lhs_stderr, rep.rhs, rep.ratio, rep.fitted_c1,
           rep.exact)
    return report, ("lhs", "lhs_stderr", "rhs", "ratio", "fitted_c1",
                    "exact"), [row]


def _cmd_localfactors(res: _Resolver, seed: int):
    w = res.get("w", 3, int)
    b = res.get("b", 1, int)
    primes = _parse_int_list(res.get("primes", "5,7,11,13"))
    report = {"command": "localfactors",
              "config": {"w": w, "b": b, "primes": primes, "seed": seed}}
    rows = []
    n_random = res.get("random", 0, int)
    if n_random:
        rng = substream(seed, "cli-random-theta")
        checked = skipped = 0
        violations = []
        for _ in range(n_random):
            system = _random_theta_system(rng, w, b)
            rep = verify_local_factor_cases(system, primes)
            checked += rep.checked
            skipped += len(rep.skipped)
            violations.extend(rep.violations)
        report["random_systems"] = {"count": n_random, "checked": checked,
                                    "skipped": skipped,
                                    "violations": violations}
        rows = [(v["p"], json.dumps(v["X"]), v["claim"]) for v in violations]
        header = ("p", "X", "violated_claim")
    else:
        forms = _parse_vectors(res.get("forms", "1"))
        shift_table = _parse_vectors(res.get("shift-table", "0,1"))
        system = ThetaSystem(forms=forms, shifts=shift_table, w=w, b=b)
        rep = verify_local_factor_cases(system, primes)
        report["cases"] = {"checked": rep.checked, "ok": rep.ok,
                           "skipped": rep.skipped,
                           "violations": rep.violations}
        report["config"]["forms"] = [list(r) for r in forms]
        report["config"]["shift_table"] = [list(r) for r in shift_table]
        rows = [(v["p"], json.dumps(v["X"]), v["claim"])
                for v in rep.violations]
        header = ("p", "X", "violated_claim")
    euler_m = res.get("euler-M", 0, int)
    if euler_m:
        rep = euler_factor_identity_check(euler_m, w)
        report["euler"] = {
            "max_err": rep["max_err"],
            "g2_exact_ok": rep["g2_exact_ok"],
            "g2_zero_product": rep["g2_zero_product"],
            "g2_zero_target": rep["g2_zero_target"],
        }
        header = ("p", "direct", "product", "err")
        rows = [(r["p"], r["direct"], r["product"], r["err"])
                for r in rep["factor_rows"]]
    return report, header, rows


def _random_theta_system(rng, w: int, b: int) -> ThetaSystem:
    """Small random system; rejection keeps the family pairwise independent
    and the shifts distinct."""
    while True:
        m1 = int(rng.integers(1, 3))
        m0 = int(rng.integers(1, 4))
        r = int(rng.integers(2, 4))
        forms = tuple(tuple(int(c) for c in rng.integers(-5, 6, size=r))
                      for _ in range(m1))
        shifts = tuple(tuple(int(s) for s in
                             rng.choice(20, size=m0, replace=False))
                       for _ in range(m1))
        try:
            return ThetaSystem(forms=forms, shifts=shifts, w=w, b=b)
        except InvalidInputError:
            continue


def _cmd_vonneumann(res: _Resolver, seed: int, samples: int, cache):
    N = res.get("modulus", 31, int)
    d = res.get("dim", 2, int)
    vtext = res.get("vectors")
    vectors = _parse_vectors(vtext) if vtext else _identity_vectors(d)
    basis = Basis(vectors, N)
    probes = res.get("probes", 12, int)
    strategy = res.get("strategy", "exact")
    if res.get("with-measure", False, bool):
        mu = _measure_mu(res, N, d, cache)
    else:
        mu = GridFunction.constant(N, d, 1.0)
    rep = von_neumann_probe(mu, basis, probes=probes, seed=seed,
                            strategy=strategy, samples=samples)
    report = {
        "command": "vonneumann",
        "config": {"modulus": N, "dim": d,
                   "vectors": [list(v) for v in vectors],
                   "probes": probes, "seed": seed, "strategy": strategy,
                   "samples": samples,
                   "with_measure": res.resolved.get("with-measure", False)},
        "result": rep,
    }
    rows = [(p["box_norm"], p["abs_lambda"],
             "" if p["ratio"] is None else p["ratio"], p["signed"])
            for p in rep["pairs"]]
    return report, ("box_norm", "abs_lambda", "ratio", "signed"), rows


def _cmd_count(res: _Resolver, cache):
    box = res.get("box", 50, int)
    vectors = _parse_vectors(res.get("vectors", "1,2;2,1"))
    t_max = res.get("t-max", None, int)
    d = len(vectors[0])
    table = prime_table(box + 1)
    primes = [int(p) for p in np.flatnonzero(table)]
    pts = _prime_grid(primes, d)
    found = find_constellations(pts, vectors, t_max=t_max)
    report = {
        "command": "count",
        "config": {"box": box, "vectors": [list(v) for v in vectors],
                   "t_max": t_max, "dim": d},
        "n_points": len(pts),
        "n_constellations": len(found),
        "constellations": [
            {"x": list(c.x), "t": c.t,
             "points": [list(p) for p in c.points]} for c in found],
    }
    rows = [(json.dumps(list(c.x)), c.t,
             json.dumps([list(p) for p in c.points]), c.genuine)
            for c in found]
    return report, ("x", "t", "points", "genuine"), rows


def _prime_grid(primes, d: int):
    return [tuple(p) for p in itertools.product(primes, repeat=d)]


def _cmd_pipeline(res: _Resolver, seed: int, samples: int, cache):
    target = res.get("set", "primes")
    alpha = res.get("alpha", 1.0, float)
    vectors = _parse_vectors(res.get("vectors", "1,2;2,1"))
    n_initial = res.get("n-initial", 10000, int)
    report = run_pipeline(target, alpha, vectors, n_initial,
                          w=res.get("w", None, int),
                          R=res.get("R", None, float),
                          samples=samples, seed=seed, cache=cache,
                          max_emit=res.get("max-emit", 500, int))
    report = {"command": "pipeline", "target_set": target, **report}
    rows = [(json.dumps(c["x"]), c["t"], json.dumps(c["points"]),
             c["genuine"]) for c in report["constellations"]]
    return report, ("x", "t", "points", "genuine"), rows


_LADDER_PRIME_REQUIRED = {"boxnorm"}


def _cmd_ladder(res: _Resolver, args, seed: int, samples: int, cache):
    command = res.get("command")
    if command not in ("measure", "linforms", "correlation", "boxnorm"):
        raise InvalidInputError("ladder supports measure, linforms, "
                                "correlation, boxnorm")
    n_list = _parse_int_list(res.get("n-list", ""))
    if len(n_list) < 1:
        raise InvalidInputError("n-list must name at least one modulus")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise InvalidInputError("n-list must be strictly ascending")
    if command in _LADDER_PRIME_REQUIRED:
        for n in n_list:
            if not is_prime(n):
                raise InvalidInputError(
                    "command %r needs prime moduli; %d is not prime"
                    % (command, n))
    expect = res.get("expect", "none")
    if expect not in ("none", "decreasing", "increasing"):
        raise InvalidInputError("expect must be none/decreasing/increasing")

    rows = []
    for n in n_list:
        sub = _Resolver(args, command)
        setattr(args, "modulus", n)
        if command == "measure":
            rep, _, _ = _cmd_measure(sub, cache)
            stat, band = rep["mean_deviation"], 0.0
        elif command == "linforms":
            rep, _, _ = _cmd_linforms(sub, seed, samples, cache)
            stat, band = rep["deviation"], 3.0 * rep["stderr"]
        elif command == "correlation":
            rep, _, _ = _cmd_correlation(sub, seed, samples, cache)
            stat, band = rep["ratio"], 3.0 * rep["lhs_stderr"]
        else:
            rep, _, _ = _cmd_boxnorm(sub, seed, samples)
            stat, band = rep["box_norm"], 0.0
        rows.append((n, stat, band))

    stats = [r[1] for r in rows]
    violations = []
    if expect == "decreasing":
        violations = [i for i in range(len(stats) - 1)
                      if stats[i + 1] >= stats[i]]
    elif expect == "increasing":
        violations = [i for i in range(len(stats) - 1)
                      if stats[i + 1] <= stats[i]]
    report = {
        "command": "ladder",
        "config": {"wrapped": command, "n_list": n_list, "expect": expect,
                   "seed": seed, "samples": samples},
        "trend": [{"N": n, "statistic": s, "band": b} for n, s, b in rows],
        "trend_violations": violations,
        "trend_ok": (not violations) if expect != "none" else None,
    }
    return report, ("N", "statistic", "band"), rows


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def _add_common(sp):
    sp.add_argument("--config", default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--cache-dir", dest="cache_dir", default=None)
    sp.add_argument("--samples", type=int, default=None)
    sp.add_argument("--no-timestamp", action="store_const", const=True,
                    default=None)


def build_parser() -> _Parser:
    parser = _Parser(prog="constlab",
                     description="desk-scale constellation laboratory")
    sub = parser.add_subparsers(dest="cmd")
    specs = {
        "geometry": ["--vectors", "--basis-file", "--modulus:int", "--lift:flag"],
        "boxnorm": ["--modulus:int", "--dim:int", "--vectors", "--strategy",
                    "--grid"],
        "dual": ["--modulus:int", "--dim:int", "--vectors", "--grid",
                 "--out-grid"],
        "qap": ["--modulus:int", "--dim:int", "--vectors", "--probes:int",
                "--with-measure:flag", "--w:int", "--b:int", "--R:float",
                "--eps1:float", "--eps2:float"],
        "measure": ["--modulus:int", "--dim:int", "--w:int", "--b:int",
                    "--R:float", "--eps1:float", "--eps2:float"],
        "linforms": ["--modulus:int", "--dim:int", "--coeffs", "--shifts",
                     "--control:flag", "--w:int", "--b:int", "--R:float",
                     "--eps1:float", "--eps2:float"],
        "correlation": ["--modulus:int", "--dim:int", "--forms",
                        "--shift-table", "--c1:float", "--c2:float",
                        "--w:int", "--b:int", "--R:float", "--eps1:float",
                        "--eps2:float"],
        "localfactors": ["--forms", "--shift-table", "--w:int", "--b:int",
                         "--primes", "--random:int", "--euler-M:int"],
        "vonneumann": ["--modulus:int", "--dim:int", "--vectors",
                       "--probes:int", "--strategy", "--with-measure:flag",
                       "--w:int", "--b:int", "--R:float", "--eps1:float",
                       "--eps2:float"],
        "count": ["--box:int", "--vectors", "--t-max:int"],
        "pipeline": ["--set", "--alpha:float", "--vectors", "--n-initial:int",
                     "--w:int", "--R:float", "--max-emit:int"],
        "ladder": ["--command", "--n-list", "--expect", "--modulus:int",
                   "--dim:int", "--coeffs", "--shifts", "--control:flag",
                   "--forms", "--shift-table", "--c1:float", "--c2:float",
                   "--w:int", "--b:int", "--R:float", "--eps1:float",
                   "--eps2:float", "--vectors", "--strategy", "--grid"],
    }
    for name, flags in specs.items():
        sp = sub.add_parser(name, add_help=True)
        _add_common(sp)
        for flag in flags:
            if flag.endswith(":flag"):
                sp.add_argument(flag[:-5], action="store_const", const=True,
                                default=None)
            elif flag.endswith(":int"):
                sp.add_argument(flag[:-4], type=int, default=None)
            elif flag.endswith(":float"):
                sp.add_argument(flag[:-6], type=float, default=None)
            else:
                sp.add_argument(flag, default=None)
    return parser


def run(args) -> int:
    if not args.cmd:
        raise InvalidInputError("no command given; see --help")
    res = _Resolver(args, args.cmd)
    seed = res.get("seed", 0, int)
    out = res.get("out", "constlab_report")
    samples = res.get("samples", 1 << 20, int)
    no_timestamp = bool(res.get("no-timestamp", False, bool))
    cache = _cache_from(res)

    if args.cmd == "geometry":
        report, header, rows = _cmd_geometry(res)
    elif args.cmd == "boxnorm":
        report, header, rows = _cmd_boxnorm(res, seed, samples)
    elif args.cmd == "dual":
        report, header, rows = _cmd_dual(res, seed)
    elif args.cmd == "qap":
        report, header, rows = _cmd_qap(res, seed, cache)
    elif args.cmd == "measure":
        report, header, rows = _cmd_measure(res, cache)
    elif args.cmd == "linforms":
        report, header, rows = _cmd_linforms(res, seed, samples, cache)
    elif args.cmd == "correlation":
        report, header, rows = _cmd_correlation(res, seed, samples, cache)
    elif args.cmd == "localfactors":
        report, header, rows = _cmd_localfactors(res, seed)
    elif args.cmd == "vonneumann":
        report, header, rows = _cmd_vonneumann(res, seed, samples, cache)
    elif args.cmd == "count":
        report, header, rows = _cmd_count(res, cache)
    elif args.cmd == "pipeline":
        report, header, rows = _cmd_pipeline(res, seed, samples, cache)
    elif args.cmd == "ladder":
        report, header, rows = _cmd_ladder(res, args, seed, samples, cache)
    else:
        raise InvalidInputError("unknown command %r" % args.cmd)

    _write_reports(out, report, header, rows, no_timestamp)
    stem = _report_stem(out)
    print("%s: report written to %s.json / %s.csv" % (args.cmd, stem, stem))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return run(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (InvalidInputError, PreconditionError) as exc:
        sys.stderr.write("error: %s\n" % exc)
        return 1
    except (NumericalFailureError, InternalInconsistencyError) as exc:
        sys.stderr.write("internal error: %s\n" % exc)
        return 2
    except ConstlabError as exc:
        sys.stderr.write("error: %s\n" % exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
