"""Command-line front end.

Subcommands: kernel, verify-deformation, wigner, symbol, star, kproduct,
fosc, convergence.  Every run emits a JSON provenance record (full
configuration, library versions, seed, backend) either next to the first
output file or embedded in the stdout JSON; no timestamps, so identical
configurations produce byte-identical outputs.

Exit codes: 0 success, 1 validation/usage error, 2 numerical-contract
failure in --strict mode.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from ._backend import backend_name
from .errors import ConfigError, MoyalError, NonConvergentWarning, NumericsWarning
from .fock import (
    DampingSchedule,
    FockOperator,
    coherent_projector,
    damped_trace,
    displacement,
    fock_projector,
    identity,
    multiply,
    number_operator,
    parity_operator,
    vacuum_projector,
)
from .foscillator import (
    AmplitudeState,
    NonlinearityFunction,
    commutator_spectrum,
    evolve_amplitude,
)
from .kernels import (
    KernelSample,
    deformation_check,
    fit_mu_quadratic,
    groenewold_analytic,
    kernel_numeric,
    lambda_kernel_analytic,
    load_triples,
    tau_kernel,
    write_kernel_csv,
)
from .kproduct import KContext, k_associativity_defect, k_multiply, k_unit, sqrt_k_transport
from .starcalc import StarConfig, star
from .weyl import PhaseGrid, PhasePoint, SymbolField, symbol_of, wigner

CONFIG_KEYS = ("dim", "damping", "extrapolation_order", "grid_extent", "grid_points", "seed")


@dataclass(frozen=True)
class RunConfig:
    """Run-wide numerical configuration and its defaults."""

    dim: int = 128
    damping: tuple = (0.4, 0.2, 0.1, 0.05)
    extrapolation_order: int = 2
    grid_extent: float = 6.0
    grid_points: int = 121
    seed: int = 20240101

    def schedule(self) -> DampingSchedule:
        return DampingSchedule(self.damping, self.extrapolation_order)

    def grid(self) -> PhaseGrid:
        return PhaseGrid.square(self.grid_extent, self.grid_points)


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _parse_floats(text: str) -> tuple:
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _parse_complex_pair(text: str) -> complex:
    parts = _parse_floats(text)
    if len(parts) == 1:
        return complex(parts[0], 0.0)
    if len(parts) == 2:
        return complex(parts[0], parts[1])
    raise ConfigError(f"expected 're' or 're,im', got {text!r}")


def build_config(args) -> RunConfig:
    """Defaults < config file < explicit flags; unknown file keys are rejected."""
    merged = asdict(RunConfig())
    if args.config:
        with open(args.config) as fh:
            payload = json.load(fh)
        if not isinstance(payload, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(payload) - set(CONFIG_KEYS))
        if unknown:
            raise ConfigError(f"unknown configuration keys: {unknown}")
        merged.update(payload)
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    merged["damping"] = tuple(float(e) for e in merged["damping"])
    return RunConfig(
        dim=int(merged["dim"]),
        damping=merged["damping"],
        extrapolation_order=int(merged["extrapolation_order"]),
        grid_extent=float(merged["grid_extent"]),
        grid_points=int(merged["grid_points"]),
        seed=int(merged["seed"]),
    )


def _provenance(command: str, cfg: RunConfig, inputs=(), outputs=(), extra=None) -> dict:
    record = {
        "command": command,
        "config": asdict(cfg),
        "inputs": list(map(str, inputs)),
        "outputs": list(map(str, outputs)),
        "backend": backend_name(),
        "versions": {
            "moyal": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
    }
    if extra:
        record["parameters"] = extra
    return record


def _provenance_path(out_path: str) -> str:
    stem, ext = os.path.splitext(out_path)
    if ext not in (".csv", ".json"):
        stem = out_path
    return stem + ".provenance.json"


def _write_provenance(record: dict, out_path: str) -> str:
    path = _provenance_path(out_path)
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _print_json(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _state_operator(spec: str, dim: int) -> FockOperator:
    name, _, arg = spec.partition(":")
    if name == "vacuum":
        return vacuum_projector(dim)
    if name == "fock":
        return fock_projector(int(arg), dim)
    if name == "coherent":
        return coherent_projector(_parse_complex_pair(arg), dim)
    raise ConfigError(f"unknown state {spec!r}; use vacuum, fock:N or coherent:RE,IM")


def _symbol_operator(spec: str, dim: int) -> FockOperator:
    name, _, arg = spec.partition(":")
    if name == "identity":
        return identity(dim)
    if name == "number":
        return number_operator(dim)
    if name == "parity":
        return parity_operator(dim)
    if name == "displacement":
        return displacement(_parse_complex_pair(arg), dim)
    return _state_operator(spec, dim)


def _nonlinearity(arg: str | None) -> NonlinearityFunction:
    if arg is None:
        return NonlinearityFunction.identity()
    if arg.startswith("@"):
        with open(arg[1:]) as fh:
            return NonlinearityFunction.from_json(fh.read())
    return NonlinearityFunction.from_json(arg)


# ---------------------------------------------------------------- subcommands


def cmd_kernel(args, cfg: RunConfig) -> int:
    schedule = cfg.schedule()

    def evaluate(x1, x2, x_out) -> KernelSample:
        if args.tau is not None:
            return tau_kernel(args.tau, x1, x2, x_out, cfg.dim, schedule)
        if args.f is not None:
            return kernel_numeric(_nonlinearity(args.f), x1, x2, x_out, cfg.dim, schedule)
        if args.numeric:
            return kernel_numeric(None, x1, x2, x_out, cfg.dim, schedule)
        if args.lam is not None:
            return lambda_kernel_analytic(args.lam, x1, x2, x_out)
        return groenewold_analytic(x1, x2, x_out)

    if args.triples:
        with open(args.triples) as fh:
            triples = load_triples(fh.read())
        samples = [evaluate(*t) for t in triples]
        if not args.out:
            raise ConfigError("batch kernel evaluation requires --out")
        write_kernel_csv(samples, args.out)
        for s in samples:
            if not s.converged:
                warnings.warn(
                    f"kernel at ({s.x1.q:.3f},{s.x1.p:.3f}|{s.x2.q:.3f},{s.x2.p:.3f}|"
                    f"{s.x_out.q:.3f},{s.x_out.p:.3f}) did not converge",
                    NonConvergentWarning,
                )
        record = _provenance("kernel", cfg, inputs=[args.triples], outputs=[args.out])
        _write_provenance(record, args.out)
        return 0
    coords = (args.q1, args.p1, args.q2, args.p2, args.q, args.p)
    if any(c is None for c in coords):
        raise ConfigError("single evaluation needs --q1 --p1 --q2 --p2 --q --p (or --triples FILE)")
    sample = evaluate(
        PhasePoint(args.q1, args.p1), PhasePoint(args.q2, args.p2), PhasePoint(args.q, args.p)
    )
    if not sample.converged:
        warnings.warn("kernel extrapolation did not converge", NonConvergentWarning)
    if args.out:
        write_kernel_csv([sample], args.out)
        _write_provenance(_provenance("kernel", cfg, outputs=[args.out]), args.out)
    payload = {
        "re": sample.value.real,
        "im": sample.value.imag,
        "err": sample.error_estimate,
        "converged": sample.converged,
        "provenance": _provenance("kernel", cfg),
    }
    _print_json(payload)
    return 0


def cmd_verify_deformation(args, cfg: RunConfig) -> int:
    with open(args.triples) as fh:
        triples = load_triples(fh.read())
    schedule = cfg.schedule()
    reports = [deformation_check(x1, x2, x_out, cfg.dim, schedule) for x1, x2, x_out in triples]
    if not args.out:
        raise ConfigError("verify-deformation requires --out")
    with open(args.out, "w") as fh:
        fh.write("q1,p1,q2,p2,q,p,mu,r_num_re,r_num_im,r_ana,abs_diff,err\n")
        for r in reports:
            fh.write(
                f"{r.x1.q!r},{r.x1.p!r},{r.x2.q!r},{r.x2.p!r},{r.x_out.q!r},{r.x_out.p!r},"
                f"{r.mu!r},{r.ratio_numeric.real!r},{r.ratio_numeric.imag!r},"
                f"{r.ratio_reference!r},{r.difference!r},{r.error_estimate!r}\n"
            )
    max_diff = max(r.difference for r in reports)
    summary = {
        "triples": len(reports),
        "max_abs_diff": max_diff,
        "max_error_estimate": max(r.error_estimate for r in reports),
    }
    if max_diff > 1e-2:
        summary["finding"] = {
            "message": "measured ratio deviates from the closed-form prediction",
            "reference": "(mu-1)^2/16",
        }
        if len(reports) >= 3:
            c0, c1, c2 = fit_mu_quadratic(
                [r.mu for r in reports], [r.ratio_numeric for r in reports]
            )
            summary["finding"]["fit"] = {"c0": c0, "c1": c1, "c2": c2}
            summary["finding"]["message"] += "; fitted quadratic in mu reported"
    record = _provenance("verify-deformation", cfg, inputs=[args.triples], outputs=[args.out])
    _write_provenance(record, args.out)
    _print_json(summary)
    return 0


def _field_summary(field: SymbolField) -> dict:
    summary = {
        "normalization": field.normalization,
        "error_estimate": field.error_estimate,
        "max_abs": float(np.abs(field.values).max()),
    }
    if field.real_valued:
        summary["max_imag"] = field.max_imag
    return summary


def cmd_wigner(args, cfg: RunConfig) -> int:
    rho = _state_operator(args.state, cfg.dim)
    field = wigner(rho, cfg.grid(), cfg.schedule())
    field.to_csv(args.out)
    record = _provenance("wigner", cfg, outputs=[args.out], extra={"state": args.state})
    _write_provenance(record, args.out)
    _print_json(_field_summary(field))
    return 0


def cmd_symbol(args, cfg: RunConfig) -> int:
    op = _symbol_operator(args.op, cfg.dim)
    field = symbol_of(op, cfg.grid(), cfg.schedule())
    field.to_csv(args.out)
    record = _provenance("symbol", cfg, outputs=[args.out], extra={"op": args.op})
    _write_provenance(record, args.out)
    _print_json(_field_summary(field))
    return 0


def cmd_star(args, cfg: RunConfig) -> int:
    grid = cfg.grid()
    schedule = cfg.schedule()
    if bool(args.in_a) != bool(args.in_b):
        raise ConfigError("--in-a and --in-b must be given together")
    if args.in_a:
        fa = SymbolField.from_csv(args.in_a)
        fb = SymbolField.from_csv(args.in_b)
        grid = fa.grid
    elif args.state_a and args.state_b:
        fa = symbol_of(_state_operator(args.state_a, cfg.dim), grid, schedule)
        fb = symbol_of(_state_operator(args.state_b, cfg.dim), grid, schedule)
    else:
        raise ConfigError("star needs either --state-a/--state-b or --in-a/--in-b")
    route = "kernel_quadrature" if args.route == "kernel" else "operator"
    star_cfg = StarConfig(
        route=route,
        grid=grid,
        dim=cfg.dim,
        schedule=schedule,
        f=_nonlinearity(args.f),
        out_bound=args.out_bound,
    )
    field = star(fa, fb, star_cfg)
    field.to_csv(args.out)
    inputs = [args.in_a, args.in_b] if args.in_a else []
    record = _provenance(
        "star", cfg, inputs=inputs, outputs=[args.out],
        extra={"route": route, "state_a": args.state_a, "state_b": args.state_b},
    )
    _write_provenance(record, args.out)
    _print_json(_field_summary(field))
    return 0


def cmd_kproduct(args, cfg: RunConfig) -> int:
    rng = np.random.default_rng(cfg.seed)
    dim = args.kdim

    def rand_matrix():
        return (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)

    k = rand_matrix()
    ctx = KContext.from_matrix(k)
    defects = []
    for _ in range(args.count):
        a, b, c = rand_matrix(), rand_matrix(), rand_matrix()
        scale = abs(a).max() * abs(b).max() * abs(c).max()
        defects.append(k_associativity_defect(a, b, c, ctx) / scale)
    a = rand_matrix()
    unit_err = float("nan")
    if ctx.invertible:
        kinv = k_unit(ctx)
        unit_err = float(np.abs(k_multiply(a, kinv, ctx) - a).max() / np.abs(a).max())
    herm = rand_matrix()
    pos = KContext.from_matrix(herm @ herm.conj().T + 0.5 * np.eye(dim))
    b = rand_matrix()
    ta, tb = sqrt_k_transport(a, pos), sqrt_k_transport(b, pos)
    tab = sqrt_k_transport(k_multiply(a, b, pos), pos)
    hom_err = float(np.abs(ta @ tb - tab).max() / np.abs(tab).max())
    report = {
        "dim": dim,
        "count": args.count,
        "max_associativity_defect_rel": float(max(defects)),
        "unit_law_rel_error": unit_err,
        "sqrt_homomorphism_rel_error": hom_err,
        "k_invertible": ctx.invertible,
        "provenance": _provenance("kproduct", cfg, extra={"kdim": dim, "count": args.count}),
    }
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        _write_provenance(report["provenance"], args.out)
    _print_json(report)
    return 0


def cmd_fosc(args, cfg: RunConfig) -> int:
    f = _nonlinearity(args.f)
    dim = cfg.dim
    spectrum = commutator_spectrum(f, dim)
    ns = np.arange(dim - 2)
    fv = f.values(dim)
    closed = (ns + 1) * fv[1 : dim - 1] ** 2 - ns * fv[: dim - 2] ** 2
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("n,f,commutator,closed_form,abs_diff\n")
            for i in range(dim - 2):
                fh.write(
                    f"{i},{float(fv[i])!r},{float(spectrum[i])!r},"
                    f"{float(closed[i])!r},{float(abs(spectrum[i] - closed[i]))!r}\n"
                )
        record = _provenance("fosc", cfg, outputs=[args.out], extra={"f": f.to_json()})
        _write_provenance(record, args.out)
    payload = {
        "nonlinearity": json.loads(f.to_json()),
        "max_closed_form_diff": float(np.abs(spectrum - closed).max()),
    }
    if args.evolve_a0 is not None:
        a0 = _parse_complex_pair(args.evolve_a0)
        kind, _, val = (args.chi or "const:1.0").partition(":")
        rate = float(val or 1.0)
        chi = (lambda e: rate * e) if kind == "linear" else (lambda e: rate)
        state = AmplitudeState(a0, chi)
        times = _parse_floats(args.times or "0.0,1.0,2.0")
        payload["evolution"] = [
            {"t": t, "re": evolve_amplitude(state, t).real, "im": evolve_amplitude(state, t).imag}
            for t in times
        ]
    if not args.out:
        payload["provenance"] = _provenance("fosc", cfg, extra={"f": f.to_json()})
    _print_json(payload)
    return 0


def cmd_convergence(args, cfg: RunConfig) -> int:
    dims = [int(d) for d in args.dims.split(",") if d.strip()]
    if not dims:
        raise ConfigError("empty dim sweep")
    schedules = []
    for block in (args.schedules or "").split(";"):
        if block.strip():
            schedules.append(DampingSchedule(_parse_floats(block), cfg.extrapolation_order))
    if not schedules:
        schedules = [cfg.schedule()]

    def target_value(dim: int, schedule: DampingSchedule):
        if args.target == "kernel":
            s = kernel_numeric(None, PhasePoint(0.3, 0.0), PhasePoint(0.0, 0.2),
                               PhasePoint(0.1, 0.1), dim, schedule)
            return s.value, s.error_estimate
        if args.target == "parity-trace":
            gamma = _parse_complex_pair(args.gamma or "1.0,1.0")
            op = multiply(displacement(gamma, dim), parity_operator(dim))
            r = damped_trace(op, schedule)
            return r.value, r.error_estimate
        if args.target == "wigner-origin":
            grid = PhaseGrid.square(1.0, 3)
            field = wigner(vacuum_projector(dim), grid, schedule)
            return complex(field.values[1, 1]), field.error_estimate
        raise ConfigError(f"unknown convergence target {args.target!r}")

    rows = []
    for schedule in schedules:
        prev = None
        for dim in dims:
            value, err = target_value(dim, schedule)
            succ = abs(value - prev) if prev is not None else float("nan")
            rows.append((dim, schedule, value, err, succ))
            prev = value
    single = len(dims) == 1
    if single:
        warnings.warn("dim sweep of length 1 yields no convergence estimate", NumericsWarning)
    non_monotone = False
    per_schedule = len(dims)
    for s_idx in range(len(schedules)):
        diffs = [r[4] for r in rows[s_idx * per_schedule : (s_idx + 1) * per_schedule]]
        diffs = [d for d in diffs if not math.isnan(d)]
        if len(diffs) >= 2 and any(b > a for a, b in zip(diffs, diffs[1:])):
            non_monotone = True
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("target,dim,schedule,value_re,value_im,err,successive_diff\n")
            for dim, schedule, value, err, succ in rows:
                sched_txt = " ".join(repr(e) for e in schedule.epsilons)
                fh.write(
                    f"{args.target},{dim},{sched_txt},{value.real!r},{value.imag!r},"
                    f"{err!r},{succ!r}\n"
                )
        record = _provenance("convergence", cfg, outputs=[args.out],
                             extra={"target": args.target, "dims": dims})
        _write_provenance(record, args.out)
    _print_json(
        {
            "target": args.target,
            "rows": len(rows),
            "single_dim": single,
            "non_monotone": non_monotone,
        }
    )
    return 0


# --------------------------------------------------------------------- driver


def build_parser() -> _Parser:
    parser = _Parser(prog="moyal", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; explicit flags take precedence")
    common.add_argument("--dim", type=int, help="truncation dimension (default 128)")
    common.add_argument("--damping", type=_parse_floats, dest="damping",
                        help="comma-separated damping strengths (default 0.4,0.2,0.1,0.05)")
    common.add_argument("--order", type=int, dest="extrapolation_order",
                        help="extrapolation order (default 2)")
    common.add_argument("--grid-extent", type=float, dest="grid_extent",
                        help="|q|,|p| half-width of the default grid (default 6)")
    common.add_argument("--grid-points", type=int, dest="grid_points",
                        help="samples per grid axis (default 121)")
    common.add_argument("--seed", type=int, help="seed for pseudo-random checks (default 20240101)")
    common.add_argument("--strict", action="store_true",
                        help="numerical-contract warnings become exit code 2")
    sub = parser.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kernel", parents=[common], help="evaluate star-product kernels")
    k.add_argument("--analytic", action="store_true", help="closed-form Groenewold kernel (default)")
    k.add_argument("--numeric", action="store_true", help="regularized trace with f = 1")
    k.add_argument("--lam", type=float, help="closed-form deformed kernel at this lambda")
    k.add_argument("--tau", type=float, help="generating-function kernel e^{i tau n}")
    k.add_argument("--f", help="nonlinearity JSON (or @file) for the numeric kernel")
    for name in ("q1", "p1", "q2", "p2", "q", "p"):
        k.add_argument(f"--{name}", type=float)
    k.add_argument("--triples", help="JSON file with a batch of point triples")
    k.add_argument("--out", help="CSV output for batch evaluation")
    k.set_defaults(func=cmd_kernel)

    v = sub.add_parser("verify-deformation", parents=[common],
                       help="trace-route ratio vs deformed-kernel prediction")
    v.add_argument("--triples", required=True)
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_verify_deformation)

    w = sub.add_parser("wigner", parents=[common], help="Wigner function of a state")
    w.add_argument("--state", required=True, help="vacuum | fock:N | coherent:RE,IM")
    w.add_argument("--out", required=True)
    w.set_defaults(func=cmd_wigner)

    s = sub.add_parser("symbol", parents=[common], help="Weyl symbol of an operator")
    s.add_argument("--op", required=True,
                   help="identity | number | parity | displacement:RE,IM | vacuum | fock:N | coherent:RE,IM")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_symbol)

    st = sub.add_parser("star", parents=[common], help="star product of two symbols")
    st.add_argument("--state-a", help="symbol of this state projector")
    st.add_argument("--state-b")
    st.add_argument("--in-a", help="read first symbol from CSV (+ JSON sidecar)")
    st.add_argument("--in-b")
    st.add_argument("--route", choices=("operator", "kernel"), default="operator")
    st.add_argument("--f", help="nonlinearity JSON for the deformed product")
    st.add_argument("--out-bound", type=float,
                    help="kernel route: evaluate only |q|,|p| <= bound outputs")
    st.add_argument("--out", required=True)
    st.set_defaults(func=cmd_star)

    kp = sub.add_parser("kproduct", parents=[common], help="K-product property checks")
    kp.add_argument("--kdim", type=int, default=16)
    kp.add_argument("--count", type=int, default=100)
    kp.add_argument("--out")
    kp.set_defaults(func=cmd_kproduct)

    fo = sub.add_parser("fosc", parents=[common], help="f-oscillator spectrum and evolution")
    fo.add_argument("--f", help='nonlinearity JSON, e.g. {"kind":"q_exact","lambda":0.1}')
    fo.add_argument("--out", help="CSV for the commutator spectrum")
    fo.add_argument("--evolve-a0", help="initial amplitude RE,IM")
    fo.add_argument("--chi", help="frequency law const:C or linear:C")
    fo.add_argument("--times", help="comma-separated evolution times")
    fo.set_defaults(func=cmd_fosc)

    c = sub.add_parser("convergence", parents=[common], help="result vs dim and damping schedule")
    c.add_argument("--target", required=True, choices=("kernel", "parity-trace", "wigner-origin"))
    c.add_argument("--dims", required=True, help="comma-separated truncation dimensions")
    c.add_argument("--schedules", help="semicolon-separated damping schedules")
    c.add_argument("--gamma", help="displacement RE,IM for parity-trace")
    c.add_argument("--out")
    c.set_defaults(func=cmd_convergence)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = build_config(args)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NumericsWarning)
            code = args.func(args, cfg)
        contract = [w for w in caught if issubclass(w.category, NumericsWarning)]
        for w in contract:
            sys.stderr.write(f"warning: {w.message}\n")
        if contract and args.strict and code == 0:
            sys.stderr.write("strict mode: numerical-contract warnings are fatal\n")
            return 2
        return code
    except (MoyalError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
