"""Batch command-line front end.

    mixapprox approximate|certify|sandwich|npmle|selftest [--config PATH] [--out DIR]
              [--precision double|extended] [--workers N] [--seed U64]

Exit codes: 0 ok, 2 validation, 3 numerical, 4 sandwich violation.
"""

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .approximators import STRATEGIES, construct, envelope, family_for_law, local_moment_match_plan
from .certificates import ROUTES, closed_form_for_law, tv_certificate
from .errors import MixApproxError, NumericalError, OutOfRegimeError, SandwichViolation, ValidationError
from .laws import law_from_dict
from .mixtures import DIVERGENCE_KINDS, chi2_moment_bound, divergence, log_chi2_moment_bound
from .npmle import constraint_from_dict, rate_scan
from .serialize import config_hash, write_csv, write_json

SANDWICH_SLACK = 1e-9
COMMANDS = ("approximate", "certify", "sandwich", "npmle", "selftest")
_U64 = 2 ** 64


@dataclass(frozen=True)
class ExperimentConfig:
    family: dict = None
    m: tuple = ()
    delta_grid: object = None
    route: str = "direct"
    divergences: tuple = ("tv", "chi2")
    strategy: str = "global"
    precision: str = "double"
    seed: int = 0
    npmle: dict = field(default_factory=dict)

    def law(self):
        return law_from_dict(self.family)

    def deltas(self):
        g = self.delta_grid
        if g is None:
            return None
        if isinstance(g, dict):
            return np.geomspace(float(g["lo"]), float(g["hi"]), int(g["n"])).tolist()
        return [float(d) for d in g]

    def to_dict(self):
        d = asdict(self)
        d["m"] = list(self.m)
        d["divergences"] = list(self.divergences)
        return d


def _field_error(name, msg):
    return ValidationError(f"config field '{name}': {msg}")


def _parse_m(v):
    if v is None:
        return ()
    if isinstance(v, int):
        return (v,)
    if isinstance(v, dict):
        try:
            lo, hi = int(v["min"]), int(v["max"])
        except (KeyError, TypeError, ValueError):
            raise _field_error("m", "range needs integer 'min' and 'max'") from None
        return tuple(range(lo, hi + 1))
    if isinstance(v, list) and all(isinstance(x, int) for x in v):
        return tuple(v)
    raise _field_error("m", f"expected an integer, a list of integers or {{min, max}}, got {v!r}")


def parse_config(raw, command, *, precision=None, seed=None):
    """Validate a config document for ``command``; flags override fields."""
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")
    known = set(ExperimentConfig.__dataclass_fields__)
    extra = set(raw) - known
    if extra:
        raise ValidationError(f"unknown config fields: {sorted(extra)}")
    cfg = dict(raw)
    if precision is not None:
        cfg["precision"] = precision
    if seed is not None:
        cfg["seed"] = seed
    m = _parse_m(cfg.get("m"))
    prec = str(cfg.get("precision", "double")).lower()
    if prec not in ("double", "extended"):
        raise _field_error("precision", f"must be 'double' or 'extended', got {prec!r}")
    s = cfg.get("seed", 0)
    if not isinstance(s, int) or not 0 <= s < _U64:
        raise _field_error("seed", f"must be an integer in [0, 2^64), got {s!r}")
    route = str(cfg.get("route", "direct")).lower()
    if route not in ROUTES:
        raise _field_error("route", f"must be one of {ROUTES}, got {route!r}")
    strategy = str(cfg.get("strategy", "global")).lower()
    if strategy not in STRATEGIES:
        raise _field_error("strategy", f"must be one of {STRATEGIES}, got {strategy!r}")
    kinds = tuple(str(k).lower() for k in cfg.get("divergences", ("tv", "chi2")))
    bad = [k for k in kinds if k not in DIVERGENCE_KINDS]
    if bad or not kinds:
        raise _field_error("divergences", f"entries must be among {DIVERGENCE_KINDS}, got {list(kinds)!r}")
    out = ExperimentConfig(cfg.get("family"), m, cfg.get("delta_grid"), route, kinds, strategy, prec, s,
                           cfg.get("npmle") or {})
    if command in ("approximate", "certify", "sandwich"):
        if out.family is None:
            raise _field_error("family", "required")
        try:
            out.law()
        except ValidationError as exc:
            raise _field_error("family", str(exc)) from None
        if not m:
            raise _field_error("m", "range is empty")
        lo = 1 if command in ("approximate", "sandwich") else 0
        if min(m) < lo:
            raise _field_error("m", f"every m must be >= {lo}, got {min(m)}")
        if out.delta_grid is not None:
            try:
                d = out.deltas()
            except (KeyError, TypeError, ValueError):
                raise _field_error("delta_grid", "expected a list or {lo, hi, n}") from None
            if not d or any(not (x > 0 and math.isfinite(x)) for x in d):
                raise _field_error("delta_grid", "must be non-empty with positive finite entries")
    if command == "npmle":
        n = out.npmle
        for key in ("truth", "constraint", "n_list"):
            if key not in n:
                raise _field_error(f"npmle.{key}", "required")
        try:
            law_from_dict(n["truth"])
            constraint_from_dict(n["constraint"])
        except (ValidationError, KeyError, TypeError) as exc:
            raise _field_error("npmle", str(exc)) from None
        nl = n["n_list"]
        if not isinstance(nl, list) or not nl or any(not isinstance(x, int) or x < 2 for x in nl) \
                or any(b <= a for a, b in zip(nl, nl[1:])):
            raise _field_error("npmle.n_list", "must be a strictly increasing list of integers >= 2")
        r = n.get("replicates", 1)
        if not isinstance(r, int) or r < 1:
            raise _field_error("npmle.replicates", "must be a positive integer")
    return out


# ---------------------------------------------------------------------------
# per-m work units (module level so worker processes can import them)
# ---------------------------------------------------------------------------

def _lemma_bound(law, strategy, m, precision):
    """Chi-square upper bound certified by the construction, or ``None``."""
    fam = family_for_law(law)
    if not fam or fam["family"] != "bounded":
        return None
    M = fam["M"]
    if strategy == "local":
        return local_moment_match_plan(law, M, m, precision=precision)[1].chi2_bound
    if strategy == "global" and 2 * m > 4 * M * M:
        return chi2_moment_bound(M, 2 * m)
    return None


def _approximate_row(cfg, m):
    law = cfg.law()
    approx = construct(law, m, cfg.strategy, cfg.precision)
    row = {"m": m, "atoms": approx.size}
    for k in cfg.divergences:
        row[k] = divergence(k, approx, law).value
    bound = _lemma_bound(law, cfg.strategy, m, cfg.precision)
    row["chi2_bound"] = bound
    fam = family_for_law(law)
    if bound is not None and cfg.strategy == "global":
        row["log_chi2_bound"] = log_chi2_moment_bound(fam["M"], 2 * m)
    elif bound:
        row["log_chi2_bound"] = math.log(bound) if bound > 0 else -math.inf
    else:
        row["log_chi2_bound"] = None
    return row, approx


def _certify_row(cfg, m):
    law = cfg.law()
    cert = tv_certificate(law, m, cfg.deltas(), cfg.route, cfg.precision)
    return {"m": m, "delta": cert.delta, "lambda_min": cert.lambda_min, "certificate": cert.value,
            "log_certificate": cert.log_value, "method": cert.method}


def _sandwich_row(cfg, m):
    law = cfg.law()
    approx = construct(law, m, cfg.strategy, cfg.precision)
    tv = divergence("tv", approx, law)
    chi2 = divergence("chi2", approx, law)
    certs = [tv_certificate(law, m, cfg.deltas(), cfg.route, cfg.precision)]
    cf = closed_form_for_law(law, m)
    if cf is not None:
        certs.append(cf)
    best = max(certs, key=lambda c: c.log_value)
    env, log_env = None, None
    fam = family_for_law(law)
    if fam:
        params = {k: v for k, v in fam.items() if k != "family"}
        try:
            e = envelope(fam["family"], m, **params)
            env, log_env = e.value, e.log_value
        except OutOfRegimeError:
            pass
    row = {"m": m, "lower_cert": best.value, "log_lower_cert": best.log_value, "cert_method": best.method,
           "measured_tv": tv.value, "measured_chi2": chi2.value, "envelope_ub": env, "log_envelope_ub": log_env}
    bad = [c for c in certs if c.value > tv.value + SANDWICH_SLACK]
    if bad:
        row["violations"] = [c.to_dict() for c in bad]
        row["approximant"] = approx.to_dict()
    return row


_ROWS = {"approximate": _approximate_row, "certify": _certify_row, "sandwich": _sandwich_row}


def _work(args):
    command, cfg, m = args
    return _ROWS[command](cfg, m)


def _run_rows(command, cfg, workers):
    jobs = [(command, cfg, m) for m in cfg.m]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_work, jobs))
    return [_work(j) for j in jobs]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _header(command, cfg):
    return (f"mixapprox {__version__} {command}", f"config_sha256={config_hash(cfg.to_dict())}")


def cmd_approximate(cfg, out, workers=1):
    results = _run_rows("approximate", cfg, workers)
    rows, files = [], []
    atom_rows = []
    for row, approx in results:
        rows.append(row)
        for a, w in zip(approx.atoms, approx.weights):
            atom_rows.append((row["m"], a, w))
        files.append(write_json(out / f"approximant_m{row['m']}.json",
                                {"m": row["m"], "atoms": list(approx.atoms), "weights": list(approx.weights)}))
    cols = ["m", "atoms", *cfg.divergences, "chi2_bound", "log_chi2_bound"]
    files.append(write_csv(out / "approximate_report.csv", cols, rows, _header("approximate", cfg)))
    files.append(write_csv(out / "approximants.csv", ["m", "atom", "weight"], atom_rows, _header("approximate", cfg)))
    return files


def cmd_certify(cfg, out, workers=1):
    rows = _run_rows("certify", cfg, workers)
    cols = ["m", "delta", "lambda_min", "certificate", "log_certificate", "method"]
    return [write_csv(out / "certify.csv", cols, rows, _header("certify", cfg))]


def cmd_sandwich(cfg, out, workers=1):
    rows = _run_rows("sandwich", cfg, workers)
    bad = [r for r in rows if "violations" in r]
    if bad:
        path = write_json(out / "sandwich_violation.json", {"config": cfg.to_dict(), "rows": bad})
        raise SandwichViolation(f"certificate exceeds measured TV at m={[r['m'] for r in bad]}; see {path}",
                                {"rows": bad})
    cols = ["m", "lower_cert", "log_lower_cert", "cert_method", "measured_tv", "measured_chi2",
            "envelope_ub", "log_envelope_ub"]
    return [write_csv(out / "sandwich.csv", cols, rows, _header("sandwich", cfg))]


def cmd_npmle(cfg, out, workers=1):
    n = cfg.npmle
    table = rate_scan(law_from_dict(n["truth"]), constraint_from_dict(n["constraint"]), n["n_list"],
                      n.get("replicates", 1), cfg.seed, workers=workers)
    rate = [(r.n, r.mean_h, r.se, r.eps_n) for r in table.rows]
    reps = [(r.n, r.replicate, r.hellinger, r.loglik, r.iterations, r.gradient_slack) for r in table.replicates]
    return [
        write_csv(out / "npmle_rate.csv", ["n", "mean_h", "se", "eps_n"], rate, _header("npmle", cfg)),
        write_csv(out / "npmle_replicates.csv", ["n", "replicate", "H", "loglik", "iters", "gradient_slack"],
                  reps, _header("npmle", cfg)),
    ]


def selftest():
    """Fast end-to-end checks; returns a list of ``(name, passed, detail)``."""
    from .approximators import gauss_quadrature
    from .certificates import lambda_min, trig_moment_matrix
    from .laws import Gaussian, Uniform
    from .mixtures import fdiv_chain_check

    checks = []
    lam = lambda_min(trig_moment_matrix(Uniform(math.pi), 8, 1.0))
    checks.append(("identity toeplitz", abs(lam - 1) < 1e-12, f"lambda_min={lam!r}"))
    c = tv_certificate(Gaussian(1.0), 1, [1.0])
    want = (1 - math.exp(-0.5)) / (4 * math.exp(0.5))
    checks.append(("gaussian m=1 certificate", abs(c.value - want) < 1e-9, f"value={c.value!r}"))
    rule = gauss_quadrature(Gaussian(1.0), 3)
    err = max(abs(rule.moment(k) - Gaussian(1.0).moment(k)) for k in range(6))
    checks.append(("gauss rule exactness", err < 1e-12, f"max error={err!r}"))
    law = Uniform(1.0)
    approx = construct(law, 4)
    tv = divergence("tv", approx, law).value
    cert = tv_certificate(law, 4).value
    checks.append(("sandwich uniform m=4", cert <= tv + SANDWICH_SLACK, f"cert={cert!r} tv={tv!r}"))
    checks.append(("divergence chain", fdiv_chain_check(approx, law).passed, ""))
    return checks


def _build_parser():
    p = argparse.ArgumentParser(prog="mixapprox", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--precision", choices=("double", "extended"))
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int)
    return p


def run(argv=None):
    args = _build_parser().parse_args(argv)
    if args.workers < 1:
        raise ValidationError("--workers must be >= 1")
    if args.command == "selftest":
        checks = selftest()
        for name, ok, detail in checks:
            print(f"{'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())
        if not all(ok for _, ok, _ in checks):
            raise NumericalError("selftest failed")
        return []
    if args.config is None:
        raise ValidationError("--config is required")
    try:
        raw = json.loads(args.config.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from None
    cfg = parse_config(raw, args.command, precision=args.precision, seed=args.seed)
    cmd = {"approximate": cmd_approximate, "certify": cmd_certify, "sandwich": cmd_sandwich,
           "npmle": cmd_npmle}[args.command]
    files = cmd(cfg, args.out, args.workers)
    for f in files:
        print(f)
    return files


def main(argv=None):
    try:
        run(argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except SandwichViolation as exc:
        print(f"sandwich violation: {exc}", file=sys.stderr)
        return 4
    except MixApproxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
