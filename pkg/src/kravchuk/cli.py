"""Command-line entry point: ``kravchuk <subcommand> [flags]``.

Exit codes: 0 success, 1 acceptance failure, 2 usage error.
Settings come from flags, then an optional ``--config`` file of
``key=value`` lines, then built-in defaults (in that order of precedence).
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as X
from . import identities as I
from .basis import basis_for, dump_phi_csv
from .csvio import render, write_atomic
from .evolution import evolve_and_compare
from .grid import Grid
from .hermite import get, registry
from .transform import KravchukTransform, build_L_direct, build_L_factored, export_matrix_csv

SUBCOMMANDS = ("basis", "rho", "phi", "consistency", "transform", "evolve", "check", "all")

# per-subcommand defaults; flags and config entries override these
DEFAULTS = {
    "basis": {"N": "50"},
    "rho": {"N": ",".join(map(str, X.RHO_N))},
    "phi": {"N": ",".join(map(str, X.PHI_N)), "n": ",".join(map(str, X.PHI_MODES))},
    "consistency": {"N": ",".join(map(str, X.CONSISTENCY_N)), "f": "gaussian"},
    "transform": {"N": "128"},
    "evolve": {"N": "100", "f": "gaussian", "t": "0,1,10,100"},
    "check": {},
    "all": {"out": "results"},
}
CONFIG_KEYS = ("N", "n", "n_max", "sigma", "t", "f", "out", "tol")


class UsageError(ValueError):
    pass


@dataclass
class Config:
    command: str
    N: list = field(default_factory=list)
    n: list = field(default_factory=list)
    n_max: int | None = None
    sigma: float = 0.0
    t: list = field(default_factory=list)
    f: str = "gaussian"
    out: Path | None = None
    tol: dict = field(default_factory=dict)
    keys: tuple = ()  # settings that were resolved (echoed into CSV metadata)


def _ints(s: str, what: str) -> list[int]:
    try:
        vals = [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{what} must be a comma-separated list of integers, got {s!r}") from None
    if not vals:
        raise UsageError(f"{what} is empty")
    return vals


def _floats(s: str, what: str) -> list[float]:
    try:
        vals = [float(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{what} must be a comma-separated list of numbers, got {s!r}") from None
    if not vals or not all(np.isfinite(vals)):
        raise UsageError(f"{what} must be a nonempty list of finite numbers, got {s!r}")
    return vals


def _tol_pairs(items) -> dict:
    out = {}
    for item in items:
        name, sep, val = item.partition("=")
        name = name.strip()
        if not sep or name not in X.TOLERANCES:
            known = ", ".join(sorted(X.TOLERANCES))
            raise UsageError(f"--tol expects NAME=VALUE with NAME one of: {known}; got {item!r}")
        try:
            out[name] = float(val)
        except ValueError:
            raise UsageError(f"tolerance {name} needs a number, got {val!r}") from None
    return out


def read_config_file(path) -> dict:
    """key=value per line; '#' starts a comment; 'tol' may repeat."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read config file {path}: {e}") from None
    cfg: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: expected key=value with key in {', '.join(CONFIG_KEYS)}")
        if key == "tol":
            cfg.setdefault("tol", []).append(val.strip())
        else:
            cfg[key] = val.strip()
    return cfg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kravchuk",
        description="Kravchuk-function discretization of the harmonic oscillator: experiments and checks.",
        epilog=f"Thread count for sweeps: environment variable {X.THREADS_ENV} (default: all cores). "
        "Exit codes: 0 success, 1 acceptance failure, 2 usage error.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND")

    def common(sp, N_help, n_help=None, sigma=False, t=False, f=False, n_max=False):
        if N_help:
            sp.add_argument("--N", help=N_help)
        if n_help:
            sp.add_argument("--n", help=n_help)
        if n_max:
            sp.add_argument("--n-max", dest="n_max", help="highest Kravchuk mode kept (default floor(|log h|/3) clamped to [4, N])")
        if sigma:
            sp.add_argument("--sigma", help="weight exponent in <a>^sigma for all norms: 0, 1 or 2 (default 0)")
        if t:
            sp.add_argument("--t", help="comma-separated times (default 0,1,10,100)")
        if f:
            names = ", ".join(fn.name for fn in registry())
            sp.add_argument("--f", help=f"test function name ({names}; default gaussian)")
        sp.add_argument("--out", help="output path or directory (default: CSV to standard output)")
        sp.add_argument("--config", help="file of key=value lines; flags take precedence over it")
        sp.add_argument("--tol", action="append", default=None, metavar="NAME=VALUE",
                        help="override an acceptance tolerance (repeatable)")

    common(sub.add_parser("basis", help="dump the phi matrix (rows n, columns k) or one phi_{n,h}"),
           "grid size, even (default 50)", "mode index; when given, prints a and phi_{n,h}(a)")
    common(sub.add_parser("rho", help="binomial weight -> gaussian convergence sweep"),
           "comma-separated even grid sizes >= 10 (default 50,100,200,400,800)", sigma=True)
    common(sub.add_parser("phi", help="Kravchuk -> Hermite convergence sweep"),
           "comma-separated even grid sizes (default 100,200,400,800)",
           "comma-separated modes (default 0,1,2,3,4,5,6,10)", sigma=True)
    common(sub.add_parser("consistency", help="operator consistency pi_h(Hg) - H_h(pi_h g) sweep"),
           "comma-separated even grid sizes (default 64,128,256,512)", sigma=True, f=True)
    common(sub.add_parser("transform", help="build the transform; print unitarity and factorization residuals"),
           "grid size, even (default 128); --out exports the factored matrix as CSV")
    common(sub.add_parser("evolve", help="time evolution against the exact Hermite solution"),
           "grid size, even (default 100)", t=True, f=True, n_max=True)
    common(sub.add_parser("check", help="run the identity suite"), None)
    common(sub.add_parser("all", help="all sweeps, identity suite and acceptance summary"),
           None, sigma=True, n_max=True)
    return p


def resolve(args: argparse.Namespace) -> Config:
    raw = dict(DEFAULTS[args.command])
    if getattr(args, "config", None):
        raw.update(read_config_file(args.config))
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    cfg = Config(args.command, keys=tuple(k for k in CONFIG_KEYS if k in raw and k not in ("out", "tol")))
    if "N" in raw:
        cfg.N = _ints(raw["N"], "--N")
        if any(n < 2 or n % 2 for n in cfg.N):
            raise UsageError(f"--N values must be even and >= 2, got {raw['N']}")
    if "n" in raw:
        cfg.n = _ints(raw["n"], "--n")
        if min(cfg.n) < 0:
            raise UsageError("--n must be nonnegative")
    if raw.get("n_max") is not None:
        cfg.n_max = _ints(str(raw["n_max"]), "--n-max")[0]
    if "sigma" in raw:
        cfg.sigma = _floats(str(raw["sigma"]), "--sigma")[0]
        if cfg.sigma not in (0.0, 1.0, 2.0):
            raise UsageError(f"--sigma must be 0, 1 or 2, got {raw['sigma']}")
    if "t" in raw:
        cfg.t = _floats(raw["t"], "--t")
    if "f" in raw:
        try:
            get(raw["f"])
        except KeyError as e:
            raise UsageError(str(e.args[0])) from None
        cfg.f = raw["f"]
    if raw.get("out"):
        cfg.out = Path(raw["out"])
    tol = raw.get("tol") or []
    cfg.tol = _tol_pairs([tol] if isinstance(tol, str) else tol)
    return cfg


def _single_N(cfg: Config) -> int:
    if len(cfg.N) != 1:
        raise UsageError(f"{cfg.command} takes a single --N, got {cfg.N}")
    return cfg.N[0]


def _emit(text: str, cfg: Config, default_name: str) -> None:
    if cfg.out is None:
        sys.stdout.write(text)
        return
    path = cfg.out / default_name if cfg.out.is_dir() or cfg.out.suffix == "" else cfg.out
    write_atomic(path, text)
    print(f"wrote {path}", file=sys.stderr)


def _meta(cfg: Config) -> dict:
    m = {"version": __version__, "command": cfg.command, "seed": f"{X.SEED:#x}"}
    for k in cfg.keys:
        v = getattr(cfg, k)
        if v not in (None, []):
            m[k] = ";".join(map(str, v)) if isinstance(v, list) else v
    return m


def cmd_basis(cfg: Config) -> int:
    grid = Grid(_single_N(cfg))
    basis = basis_for(grid)
    if cfg.n:
        n = cfg.n[0]
        if n > grid.N:
            raise UsageError(f"--n must lie in 0..{grid.N}")
        rows = zip(grid.indices, grid.nodes, basis.phi_scaled[n])
        _emit(render(["k", "a", f"phi{n}_h"], rows, _meta(cfg)), cfg, f"phi{n}_N{grid.N}.csv")
    elif cfg.out is None:
        header = ["n"] + [f"k{k}" for k in range(grid.size)]
        rows = ([n, *basis.phi[n]] for n in range(grid.size))
        sys.stdout.write(render(header, rows, _meta(cfg)))
    else:
        path = cfg.out / f"phi_N{grid.N}.csv" if cfg.out.suffix == "" else cfg.out
        dump_phi_csv(basis, path)
        print(f"wrote {path}", file=sys.stderr)
    return 0


def cmd_sweep(cfg: Config) -> int:
    if cfg.command == "rho":
        res = X.sweep_rho_convergence(cfg.N, cfg.sigma)
    elif cfg.command == "phi":
        res = X.sweep_phi_convergence(cfg.N, cfg.n, cfg.sigma)
    else:
        res = X.sweep_operator_consistency(get(cfg.f), cfg.N, cfg.sigma)
    _emit(res.csv_text(_meta(cfg)), cfg, f"{res.name}.csv")
    return 0


def cmd_transform(cfg: Config) -> int:
    N = _single_N(cfg)
    grid = Grid(N)
    tol = {**X.TOLERANCES, **cfg.tol}
    Lf = build_L_factored(grid)
    Ld = build_L_direct(basis_for(grid))
    uni = KravchukTransform(grid).unitarity_residual()
    fkt = float(np.abs(Lf - Ld).max())
    fac = I.scaled_factorization_residual(N) if N >= 2 else 0.0
    ufac = I.unscaled_factorization_max(N)
    print(f"N={N}")
    print(f"unitarity_residual={uni:.3e}")
    print(f"max|L_direct-L_factored|={fkt:.3e}")
    print(f"factorization_residual_scaled={fac:.3e}")
    print(f"factorization_residual_unscaled={ufac:.3e}")
    if cfg.out is not None:
        path = cfg.out / f"L_factored_N{N}.csv" if cfg.out.suffix == "" else cfg.out
        export_matrix_csv(Lf, path, _meta(cfg))
        print(f"wrote {path}", file=sys.stderr)
    ok = uni <= tol["unitarity"] and fkt <= tol["fkt"] and max(fac, ufac) <= tol["factorization"]
    return 0 if ok else 1


def cmd_evolve(cfg: Config) -> int:
    grid = Grid(_single_N(cfg))
    if cfg.n_max is not None and not 0 <= cfg.n_max <= grid.N:
        raise UsageError(f"--n-max must lie in 0..{grid.N}")
    table = evolve_and_compare(get(cfg.f), grid, cfg.n_max, cfg.t)
    text = X.evolution_csv(table, _meta(cfg))
    _emit(text, cfg, f"evolve_{cfg.f}_N{grid.N}.csv")
    return 0


def cmd_check(cfg: Config) -> int:
    checks = I.run_identity_suite()
    text = render(["identity", "residual", "threshold", "passed"],
                  [(c.name, c.value, c.threshold, c.passed) for c in checks], _meta(cfg))
    if cfg.out is not None:
        _emit(text, cfg, "identities.csv")
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name:40s} {c.value:.3e} (<= {c.threshold:g})")
    return 0 if all(c.passed for c in checks) else 1


def cmd_all(cfg: Config) -> int:
    kw = {}
    if cfg.n_max is not None:
        kw["n_max"] = cfg.n_max
    run = X.RunConfig(out=cfg.out or Path("results"), sigma=cfg.sigma, tolerances=cfg.tol, **kw)
    return X.run_all(run)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # --help / --version exit 0, parse errors exit 2
        return int(e.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("kravchuk: error: a subcommand is required", file=sys.stderr)
        return 2
    try:
        cfg = resolve(args)
        handler = {
            "basis": cmd_basis, "rho": cmd_sweep, "phi": cmd_sweep, "consistency": cmd_sweep,
            "transform": cmd_transform, "evolve": cmd_evolve, "check": cmd_check, "all": cmd_all,
        }[cfg.command]
        return handler(cfg)
    except (UsageError, X.ConfigError) as e:
        parser.print_usage(sys.stderr)
        print(f"kravchuk {args.command}: error: {e}", file=sys.stderr)
        return 2
