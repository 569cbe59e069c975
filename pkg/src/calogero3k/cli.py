"""Command-line front end.

Commands: ``spectrum``, ``verify``, ``sample``, ``equivalence``.  Output
format follows the ``--out`` extension (``.csv`` or ``.json``).  The exit
status is 0 exactly when every executed check passed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import oracle
from .config import ConfigError, load_model, parse_state
from .model import ModelValidationError, ValidatedModel
from .quantum_numbers import (StateIndex, energy, enumerate_spectrum, epsilon_chain, kappa0,
                              spectra_equivalence_mu0)
from .wavefunction import (SamplingError, SingularConfigurationError, eval_psi_general, eval_psi_k2,
                           hamiltonian_residual, sample_configurations)

FD_TOL = 1e-6
FD_TOL_WEAK = 1e-5
ORTHO_TOL = 1e-8
REDUCTION_RANGE = (2.2, 6.0)


def _fmt(e: float) -> str:
    return f"{e:.12g}"


def _write(path: str | None, csv_text: str | None, json_text: str) -> None:
    if path is None:
        return
    p = Path(path)
    if p.suffix == ".csv":
        if csv_text is None:
            raise ConfigError("this command writes JSON only; use a .json output path")
        p.write_text(csv_text)
    elif p.suffix == ".json":
        p.write_text(json_text)
    else:
        raise ConfigError(f"cannot infer output format from {path!r}; use .csv or .json")


def _cutoff(model: ValidatedModel, args) -> float:
    if args.emax is not None:
        return args.emax
    if args.above is not None:
        return energy(model, StateIndex.ground(model.k)) + args.above * model.omega
    raise ConfigError("give --emax or --above")


def cmd_spectrum(args) -> int:
    model = load_model(args.model)
    table = enumerate_spectrum(model, _cutoff(model, args))
    _write(args.out, table.to_csv(), table.to_json())
    if table.levels:
        print(f"ground energy {_fmt(table.levels[0].energy)}")
    print(f"levels {len(table.levels)}  states {table.total_states}")
    if args.out is None:
        sys.stdout.write(table.to_csv())
    return 0


def cmd_equivalence(args) -> int:
    model = load_model(args.model)
    if model.mu != 0:
        raise ConfigError("the equivalence check needs mu = 0")
    rep = spectra_equivalence_mu0(model, _cutoff(model, args))
    _write(args.out, None, rep.to_json())
    print(f"levels {len(rep.hyperspherical)}  equal {rep.equal}")
    if not rep.equal:
        print(f"first discrepancy {rep.first_discrepancy}")
    return 0 if rep.equal else 1


def _states(model: ValidatedModel, specs) -> list[StateIndex]:
    return [parse_state(s, model.k) for s in specs] if specs else [StateIndex.ground(model.k)]


def _fd_checks(model: ValidatedModel, base: int) -> list[dict]:
    """Every 1D operator of the separated problem, at the ground state of the model."""
    ground = StateIndex.ground(model.k)
    out = []

    def add(label, rep, tol):
        out.append({"check": label, "passed": rep.passed(tol), "tolerance": tol,
                    "max_relative_error": rep.max_relative_error, "report": rep.to_dict()})

    for lam in sorted(set(model.lam.values())):
        a = 0.5 * math.sqrt(1 + 2 * lam)
        rep = oracle.fd_eigen_angular(lam, 3, oracle.Grid1D(0, math.pi / 3, base))
        add(f"angular lambda={lam}", rep, FD_TOL if a >= 0.5 else FD_TOL_WEAK)
    eps = epsilon_chain(model, ground)
    a = model.a_chain()
    seen = set()
    for p in range(len(a) - 1):
        bp = 3 * (0.5 + a[p])
        key = (round(bp, 12), round(eps[p + 1], 12))
        if key in seen:
            continue
        seen.add(key)
        rep = oracle.fd_eigen_jacobi_type(eps[p + 1] ** 2, bp**2, 3, oracle.Grid1D(0, math.pi / 2, base))
        add(f"jacobi-type A={_fmt(eps[p + 1] ** 2)} B={_fmt(bp ** 2)}", rep, FD_TOL)
    rep = oracle.fd_eigen_gegenbauer_type(eps[0] ** 2, 3, oracle.Grid1D(0, math.pi, base))
    add(f"gegenbauer-type D={_fmt(eps[0] ** 2)}", rep, FD_TOL)
    C = model.mu + kappa0(model, ground) ** 2
    r_max = oracle.radial_rmax(model.omega, math.sqrt(C), 2)
    rep = oracle.fd_eigen_radial(model.omega, C, 3, r_max, oracle.Grid1D(0, r_max, base))
    add(f"radial C={_fmt(C)}", rep, FD_TOL)
    return out


def cmd_verify(args) -> int:
    model = load_model(args.model)
    states = _states(model, args.state)
    checks = []
    if not args.skip_fd:
        checks.extend(_fd_checks(model, args.grid))
    if model.k == 2 and args.ortho_max >= 0:
        rep = oracle.orthogonality_sweep(model, args.ortho_max)
        checks.append({"check": f"orthogonality max_index={args.ortho_max}",
                       "passed": rep.max_normalized_overlap < ORTHO_TOL, "tolerance": ORTHO_TOL,
                       "max_normalized_overlap": rep.max_normalized_overlap, "pairs": rep.n_pairs})
    tol = 1e-5 if model.k == 2 else 1e-4
    for st in states:
        rep = hamiltonian_residual(model, st, args.points, args.step, seed=args.seed,
                                   energy_shift=args.energy_shift)
        ok = rep.max_relative_residual < tol and REDUCTION_RANGE[0] <= rep.reduction_factor <= REDUCTION_RANGE[1]
        checks.append({"check": f"residual {json.dumps(st.to_dict(), sort_keys=True)}", "passed": ok,
                       "tolerance": tol, "max_relative_residual": rep.max_relative_residual,
                       "reduction_factor": rep.reduction_factor, "energy": rep.energy_used})
    all_ok = all(c["passed"] for c in checks)
    for c in checks:
        detail = {k: v for k, v in c.items() if k in ("max_relative_error", "max_normalized_overlap",
                                                      "max_relative_residual", "reduction_factor")}
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['check']}  "
              + "  ".join(f"{k}={v:.3g}" for k, v in detail.items()))
    doc = {"schema": "calogero3k.verify/1", "model_hash": model.fingerprint(), "passed": all_ok,
           "checks": checks}
    csv_buf = io.StringIO()
    w = csv.writer(csv_buf, lineterminator="\n")
    w.writerow(["check", "passed"])
    for c in checks:
        w.writerow([c["check"], c["passed"]])
    _write(args.out, csv_buf.getvalue(), json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print("all checks passed" if all_ok else "some checks FAILED")
    return 0 if all_ok else 1


def cmd_sample(args) -> int:
    model = load_model(args.model)
    st = _states(model, args.state)[0]
    N = 3**model.k
    if args.cut is not None:
        base = sample_configurations(model, st, 1, seed=args.seed)[0]
        t = np.linspace(args.cut_range[0], args.cut_range[1], args.points)
        x = np.repeat(base[None, :], args.points, axis=0)
        x[:, args.cut - 1] = base[args.cut - 1] + t
    else:
        x = sample_configurations(model, st, args.points, seed=args.seed)
    rows, skipped = [], 0
    for xi in x:
        with np.errstate(all="ignore"):
            g = float(eval_psi_general(model, st, xi))
            k2 = float(eval_psi_k2(model, st, xi)) if model.k == 2 else None
        if not np.isfinite(g):
            skipped += 1
            continue
        rows.append((xi, g, k2))
    header = [f"x{i + 1}" for i in range(N)] + ["psi_general"]
    if model.k == 2:
        header += ["psi_k2", "ratio"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    records = []
    for xi, g, k2 in rows:
        row = [f"{v:.17g}" for v in xi] + [f"{g:.17g}"]
        rec = {"x": [float(v) for v in xi], "psi_general": g}
        if model.k == 2:
            ratio = g / k2 if k2 not in (0.0, None) else float("nan")
            row += [f"{k2:.17g}", f"{ratio:.17g}"]
            rec.update(psi_k2=k2, ratio=ratio)
        w.writerow(row)
        records.append(rec)
    doc = {"schema": "calogero3k.samples/1", "state": st.to_dict(), "seed": args.seed,
           "skipped": skipped, "rows": records}
    _write(args.out, buf.getvalue(), json.dumps(doc, indent=2) + "\n")
    print(f"rows {len(rows)}  skipped {skipped}")
    if args.out is None:
        sys.stdout.write(buf.getvalue())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="calogero3k", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--model", required=True, help="model file (key = value lines)")
        sp.add_argument("--out", help="output path; .csv or .json")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("spectrum", help="tabulate energy levels up to a cutoff")
    common(sp)
    sp.add_argument("--emax", type=float)
    sp.add_argument("--above", type=float, help="cutoff as ground energy + ABOVE * omega")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("equivalence", help="compare mu = 0 hyperspherical and separable spectra")
    common(sp)
    sp.add_argument("--emax", type=float)
    sp.add_argument("--above", type=float)
    sp.set_defaults(func=cmd_equivalence)

    sp = sub.add_parser("verify", help="run oracle sweeps and residual tests")
    common(sp)
    sp.add_argument("--state", action="append", help="state string; repeatable (default ground)")
    sp.add_argument("--points", type=int, default=100)
    sp.add_argument("--step", type=float, default=1e-3)
    sp.add_argument("--grid", type=int, default=oracle.DEFAULT_BASE_INTERVALS,
                    help="coarsest finite-difference grid (intervals)")
    sp.add_argument("--ortho-max", type=int, default=1,
                    help="largest index in the k = 2 orthogonality sweep; -1 skips it")
    sp.add_argument("--energy-shift", type=float, default=0.0, help="perturb E in the residual test")
    sp.add_argument("--skip-fd", action="store_true")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("sample", help="evaluate the eigenfunction at sample points")
    common(sp)
    sp.add_argument("--state", action="append")
    sp.add_argument("--points", type=int, default=100)
    sp.add_argument("--cut", type=int, help="1-based coordinate for a 1D cut through a sampled point")
    sp.add_argument("--cut-range", type=float, nargs=2, default=(-1.0, 1.0))
    sp.set_defaults(func=cmd_sample)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ModelValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SamplingError, SingularConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
