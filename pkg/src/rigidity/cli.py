"""Command-line front end: ``rigidity build|search|approximate|density|report``.

Exit codes: 0 success (a search that finds nothing is still a success),
2 unreadable or malformed input, 3 validation failure, 4 unsupported model
kind, 5 certificate verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    CertificateError,
    RigidityCertificate,
    chebyshev_density_bound,
    power_coefficients,
    rigidity_scan,
    verify_certificate,
)
from .constraints import SequenceConstraint
from .linalg import SpectralUnitary
from .measures import CircleMeasure, spectral_measure_of, wiener_average
from .semigroups import (
    embed_unitary,
    group_coefficients,
    group_residuals,
    group_rigidity_search,
    lambda_rigid_approximant_cont,
    sample_times,
    verify_group_certificate,
)
from .spectral import lambda_rigid_approximant
from .specfile import (
    FORMAT_VERSION,
    SpecParseError,
    SpecValidationError,
    UnsupportedKind,
    build_group,
    build_measure,
    build_operator,
    build_probes,
    dump_json,
    group_section,
    load_spec,
    operator_section,
    parse_complex,
    parse_lambda_text,
    resolve_seed,
    write_csv,
)

log = logging.getLogger("rigidity")

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_UNSUPPORTED, EXIT_VERIFY = 0, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _lam(value) -> complex:
    lam = parse_lambda_text(value) if isinstance(value, str) else value
    if abs(abs(lam) - 1) > 1e-9:
        raise SpecValidationError(f"lambda {lam} is not unimodular")
    return lam / abs(lam)


def _param(args, doc, name, key=None, default=None):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return doc.get("analysis", {}).get(key or name, default)


def _analysis_lambda(args, doc) -> complex:
    if args.lam is not None:
        return _lam(args.lam)
    if "lambda" in doc.get("analysis", {}):
        return _lam(parse_complex(doc["analysis"]["lambda"]))
    return 1 + 0j


def _out_paths(args, suffixes):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return [out / f"{args.name}{s}" for s in suffixes]


def _header(kind: str, seed: int) -> dict:
    return {"version": FORMAT_VERSION, "type": kind, "tool_version": __version__, "seed": seed}


def _probe_section(doc: dict) -> dict:
    section = dict(doc.get("probes", {}))
    if "vectors" not in section:
        section.setdefault("basis", 8)
        section.setdefault("random", 8)
        section.setdefault("support", None)
    return section


# -- build ----------------------------------------------------------------

def _operator_summary(T) -> dict:
    out = {"kind": T.kind, "dim": T.dim, "contractive": T.contractive,
           "isometric": T.isometric, "unitary": T.unitary}
    if isinstance(T, SpectralUnitary):
        mu = CircleMeasure.from_atoms(T.angles, T.weights)
        out.update(atoms=mu.size, continuity_score=mu.continuity_score())
    return out


def cmd_build(args) -> int:
    doc = load_spec(args.spec)
    summary = {"seed": resolve_seed(doc)}
    if "operator" in doc:
        summary["operator"] = _operator_summary(build_operator(doc["operator"]))
    if "measure" in doc:
        mu = build_measure(doc["measure"])
        atoms = mu.angles.size if isinstance(mu, CircleMeasure) else mu.points.size
        summary["measure"] = {"kind": doc["measure"]["kind"], "atoms": int(atoms),
                              "continuity_score": mu.continuity_score()}
    if "group" in doc:
        G = build_group(doc["group"])
        summary["group"] = {"dim": G.dim, "atoms": G.dim, "continuity_score": float(np.sum(G.weights**2))}
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


# -- search ---------------------------------------------------------------

def cmd_search(args) -> int:
    doc = load_spec(args.spec)
    seed = resolve_seed(doc)
    lam = _analysis_lambda(args, doc)
    eps = float(_param(args, doc, "epsilon", default=0.1))
    max_terms = int(_param(args, doc, "max_terms", default=8))
    lane_text = _param(args, doc, "lane")
    constraint = SequenceConstraint.parse_lane(lane_text) if lane_text else SequenceConstraint.all()
    if eps <= 0:
        raise SpecValidationError("epsilon must be positive")
    cert_path, csv_path = _out_paths(args, (".cert.json", ".csv"))
    started = time.perf_counter()
    t_max = _param(args, doc, "tmax", "t_max")
    if "operator" in doc:
        T = build_operator(doc["operator"])
        P = build_probes(doc.get("probes"), T.dim, seed)
        horizon = int(_param(args, doc, "horizon", default=10_000))
        cert, ns, res = rigidity_scan(T, P, lam, eps, horizon, constraint, max_terms)
        write_csv(csv_path, ("n", "residual"), (ns, res))
        model = {"operator": doc["operator"]}
        params = {"lambda": [lam.real, lam.imag], "epsilon": eps, "horizon": horizon,
                  "lane": constraint.to_dict(), "max_terms": max_terms}
    elif "group" in doc and t_max is not None:
        G = build_group(doc["group"])
        P = build_probes(doc.get("probes"), G.dim, seed)
        step = float(_param(args, doc, "step", default=0.1))
        times = sample_times(float(t_max), step)
        lane = None if constraint.form == "all" else constraint
        if lane is not None:
            times = times[lane.mask(times)]
        cert = group_rigidity_search(G, P, lam, eps, float(t_max), step, lane, max_terms)
        if cert is not None:
            times = times[times <= cert.sequence[-1] + step / 2]
        write_csv(csv_path, ("t", "residual"), (times, group_residuals(G, P, lam, times)))
        model = {"group": doc["group"]}
        params = {"lambda": [lam.real, lam.imag], "epsilon": eps, "t_max": float(t_max), "step": step,
                  "lane": constraint.to_dict(), "max_terms": max_terms}
    else:
        raise CliError(EXIT_UNSUPPORTED, "search needs an operator, or a group together with --tmax")
    doc_out = _header("certificate", seed)
    doc_out.update(model=model, probes=_probe_section(doc), parameters=params, probe_id=P.tag,
                   found=cert is not None, certificate=cert.to_dict() if cert else None,
                   reason=None if cert else "no admissible index below epsilon within the horizon",
                   trace=csv_path.name)
    dump_json(doc_out, cert_path)
    log.info("search finished in %.3fs", time.perf_counter() - started)
    print(json.dumps({"found": cert is not None, "terms": len(cert) if cert else 0,
                      "certificate": str(cert_path), "trace": str(csv_path)}))
    return EXIT_OK


# -- approximate ----------------------------------------------------------

def cmd_approximate(args) -> int:
    doc = load_spec(args.spec)
    seed = resolve_seed(doc)
    lam = _analysis_lambda(args, doc)
    N = int(_param(args, doc, "min_period", default=1))
    eps = float(_param(args, doc, "epsilon", default=0.1))
    model_path, report_path = _out_paths(args, (".approx.json", ".bound.json"))
    spec_out = {"version": FORMAT_VERSION, "seed": seed}
    report = _header("approximant", seed)
    if args.continuous:
        t0 = float(_param(args, doc, "t0", default=1.0))
        if "group" in doc:
            G = build_group(doc["group"])
        elif "operator" in doc and isinstance(T := build_operator(doc["operator"]), SpectralUnitary):
            G = embed_unitary(T)
        else:
            raise CliError(EXIT_UNSUPPORTED, "continuous approximation needs a group or a spectral operator")
        res = lambda_rigid_approximant_cont(G, lam, N, eps, t0)
        f = np.ones(G.dim)
        periodic = float(res.G.norm(np.exp(1j * res.m * res.G.freqs) * f - lam * f))
        spec_out["group"] = group_section(res.G)
        report.update(mode="continuous", m=res.m, t0=t0, sup_diff=res.sup_diff,
                      bound=res.uniform_bound(t0), periodicity_residual=periodic)
    else:
        if "operator" not in doc:
            raise CliError(EXIT_UNSUPPORTED, "discrete approximation needs an operator section")
        T = build_operator(doc["operator"])
        if not isinstance(T, SpectralUnitary):
            raise CliError(EXIT_UNSUPPORTED, f"operator kind {T.kind!r} has no spectral model to round")
        res = lambda_rigid_approximant(T, lam, N, eps)
        f = np.ones(T.dim)
        periodic = float(res.P.norm(res.P.power(res.n, f) - lam * f))
        spec_out["operator"] = operator_section(res.P)
        report.update(mode="discrete", n=res.n, bound=res.bound, error=res.error, periodicity_residual=periodic)
    report.update(parameters={"lambda": [lam.real, lam.imag], "min_period": N, "epsilon": eps},
                  model=str(model_path.name))
    dump_json(spec_out, model_path)
    dump_json(report, report_path)
    print(json.dumps({k: report[k] for k in ("mode", "bound", "periodicity_residual")} |
                     {"period": report.get("n", report.get("m"))}))
    return EXIT_OK


# -- density --------------------------------------------------------------

def _probe_vector(text: str, dim: int, seed: int) -> np.ndarray:
    head, _, tail = text.partition(":")
    x = np.zeros(dim, dtype=complex)
    try:
        if head == "constant":
            x[:] = 1.0
        elif head == "basis":
            k = int(tail)
            if not 1 <= k <= dim:
                raise SpecValidationError(f"basis index {k} outside 1..{dim}")
            x[k - 1] = 1.0
        elif head == "first":
            x[: int(tail)] = 1.0
        elif head == "random":
            rng = np.random.default_rng(seed)
            x = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        elif head == "vector":
            vals = [complex(v) for v in tail.split(",")]
            if len(vals) != dim:
                raise SpecValidationError(f"probe has {len(vals)} entries, model has dim {dim}")
            x[:] = vals
        else:
            raise SpecValidationError(f"unknown probe {text!r}")
    except ValueError as exc:
        if isinstance(exc, SpecValidationError):
            raise
        raise SpecValidationError(f"cannot parse probe {text!r}") from None
    if not np.any(x):
        raise SpecValidationError("probe vector is zero")
    return x


def cmd_density(args) -> int:
    doc = load_spec(args.spec)
    seed = resolve_seed(doc)
    eps = float(_param(args, doc, "epsilon", default=0.5))
    probe = _param(args, doc, "probe", default="constant")
    t_max = _param(args, doc, "tmax", "t_max")
    report_path, csv_path = _out_paths(args, (".density.json", ".csv"))
    report = _header("density", seed)
    if t_max is not None:
        step = float(_param(args, doc, "step", default=0.1))
        if "group" in doc:
            G = build_group(doc["group"])
        elif "operator" in doc and isinstance(T := build_operator(doc["operator"]), SpectralUnitary):
            G = embed_unitary(T)
        else:
            raise CliError(EXIT_UNSUPPORTED, "continuous density needs a group or a spectral operator")
        x = _probe_vector(probe, G.dim, seed)
        times = sample_times(float(t_max), step)
        coeffs = np.abs(group_coefficients(G, x, times))
        hits = int(np.count_nonzero(coeffs < eps))
        estimate = min(1.0, step * hits / float(t_max))
        write_csv(csv_path, ("t", "abs_coefficient"), (times, coeffs))
        report.update(mode="continuous", t_max=float(t_max), step=step, samples=int(times.size))
    else:
        if "operator" not in doc:
            raise CliError(EXIT_UNSUPPORTED, "discrete density needs an operator section")
        T = build_operator(doc["operator"])
        N = int(_param(args, doc, "horizon", default=10_000))
        x = _probe_vector(probe, T.dim, seed)
        coeffs = np.abs(power_coefficients(T, x, x, N))
        hits = int(np.count_nonzero(coeffs < eps))
        estimate = hits / N
        write_csv(csv_path, ("n", "abs_coefficient"), (np.arange(1, N + 1), coeffs))
        report.update(mode="discrete", horizon=N, samples=N)
        if isinstance(T, SpectralUnitary):
            mu = spectral_measure_of(T, x)
            report.update(wiener_average=wiener_average(mu, N), continuity_score=mu.continuity_score())
    second_moment = float(np.mean(coeffs**2))
    report.update(epsilon=eps, probe=probe, hits=hits, estimate=estimate, second_moment=second_moment,
                  chebyshev_lower_bound=chebyshev_density_bound(second_moment, eps), trace=csv_path.name)
    dump_json(report, report_path)
    print(json.dumps({"estimate": estimate, "hits": hits,
                      "chebyshev_lower_bound": report["chebyshev_lower_bound"]}))
    return EXIT_OK


# -- report ---------------------------------------------------------------

def _verify_document(path: Path, doc: dict):
    cert = RigidityCertificate.from_dict(doc["certificate"])
    seed = int(doc.get("seed", 0))
    model = doc["model"]
    if "operator" in model:
        T = build_operator(model["operator"])
        verify_certificate(cert, T, build_probes(doc.get("probes"), T.dim, seed))
    else:
        G = build_group(model["group"])
        verify_group_certificate(cert, G, build_probes(doc.get("probes"), G.dim, seed))


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    if not run_dir.is_dir():
        raise SpecParseError(f"{run_dir} is not a directory")
    report = {"version": FORMAT_VERSION, "type": "report", "tool_version": __version__,
              "certificates": [], "densities": [], "approximants": [], "timings": {}, "seeds": {}}
    for path in sorted(run_dir.glob("*.json")):
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SpecParseError(f"{path}: invalid JSON: {exc}") from None
        kind = doc.get("type") if isinstance(doc, dict) else None
        if kind not in ("certificate", "density", "approximant"):
            continue
        report["seeds"][path.name] = doc.get("seed")
        if kind == "certificate":
            started = time.perf_counter()
            if doc.get("found"):
                try:
                    _verify_document(path, doc)
                except (CertificateError, KeyError, ValueError, TypeError) as exc:
                    raise CliError(EXIT_VERIFY, f"certificate {path.name} failed verification: {exc}") from None
            report["timings"][path.name] = time.perf_counter() - started
            report["certificates"].append({"file": path.name, "verified": True, "found": doc.get("found"),
                                           "inputs": {"model": doc.get("model"), "probes": doc.get("probes"),
                                                      "parameters": doc.get("parameters")},
                                           "certificate": doc.get("certificate"), "reason": doc.get("reason")})
        elif kind == "density":
            report["densities"].append({"file": path.name, **{k: v for k, v in doc.items() if k != "type"}})
        else:
            report["approximants"].append({"file": path.name, **{k: v for k, v in doc.items() if k != "type"}})
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8", newline="\n")
    else:
        print(text)
    return EXIT_OK


# -- entry point ----------------------------------------------------------

def _add_output(p):
    p.add_argument("--out", default=".", help="output directory (default: current directory)")
    p.add_argument("--name", default=None, help="file stem for outputs (default: command name)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rigidity", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="validate a model file and print a summary")
    p.add_argument("spec")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("search", help="search a rigidity certificate")
    p.add_argument("spec")
    p.add_argument("--lambda", dest="lam", help="target: 1, -1, 1j, turns:x or angle:a")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--horizon", type=int)
    p.add_argument("--lane", help="arithmetic lane m:r (n = r mod m)")
    p.add_argument("--max-terms", dest="max_terms", type=int)
    p.add_argument("--tmax", type=float, help="continuous search over a group up to this time")
    p.add_argument("--step", type=float)
    _add_output(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("approximate", help="round a spectral model to an exactly periodic one")
    p.add_argument("spec")
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--min-period", dest="min_period", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--continuous", action="store_true")
    p.add_argument("--t0", type=float)
    _add_output(p)
    p.set_defaults(func=cmd_approximate)

    p = sub.add_parser("density", help="estimate the density of small matrix coefficients")
    p.add_argument("spec")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--horizon", type=int)
    p.add_argument("--tmax", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--probe", help="constant, basis:k, first:k, random or vector:v1,v2,...")
    _add_output(p)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("report", help="verify and merge the outputs in a run directory")
    p.add_argument("run_dir")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "name", "x") is None:
        args.name = args.command
    try:
        return args.func(args)
    except SpecParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SpecValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except UnsupportedKind as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
