"""Command-line scenario runner.

    dlmg <command> --config <path.json> [--out <dir>]

Commands: spectrum, gap-scan, stationary, dynamics, analytic, oracle, audit.
Every run writes ``manifest.json`` (even on failure) next to its CSV files.
Exit codes: 0 success, 1 error, 2 invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import __version__
from . import bosonic_oracle as bo
from . import dynamics as dy
from . import hp_analytic as hp
from . import lmg_model as lm
from . import spectral as spc
from . import third_quantization as tq
from .errors import CriticalPointError, DlmgError, InvalidParameterError

COMMANDS = ("spectrum", "gap-scan", "stationary", "dynamics", "analytic", "oracle", "audit")

EXIT_OK, EXIT_ERROR, EXIT_INVARIANT = 0, 1, 2


# ---------------------------------------------------------------------------
# output helpers


def _fmt(x: Any) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


@dataclass
class Check:
    name: str
    passed: bool | None  # None means skipped
    residual: float = math.nan
    tolerance: float = math.nan
    note: str = ""

    def line(self) -> str:
        status = "SKIP" if self.passed is None else ("PASS" if self.passed else "FAIL")
        text = f"[{status}] {self.name}"
        if not math.isnan(self.residual):
            text += f": residual={self.residual:.3e} (tol {self.tolerance:.1e})"
        if self.note:
            text += f" {self.note}"
        return text


def _check(name: str, residual: float, tol: float, note: str = "") -> Check:
    residual = float(residual)
    return Check(name, bool(residual <= tol), residual, tol, note)


@dataclass
class RunResult:
    files: list[str] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# config


def _model(cfg: dict[str, Any], coupling: float | None = None) -> lm.ModelParams:
    try:
        return lm.ModelParams(
            S=cfg["S"],
            coupling=cfg["coupling"] if coupling is None else coupling,
            gamma=cfg["gamma"],
            T=cfg["T"],
        )
    except KeyError as exc:
        raise InvalidParameterError(f"config is missing {exc.args[0]!r}") from None


def _couplings(cfg: dict[str, Any]) -> list[float]:
    if "couplings" in cfg:
        vals = cfg["couplings"]
    elif "coupling" in cfg:
        vals = [cfg["coupling"]]
    else:
        raise InvalidParameterError("config needs 'coupling' or 'couplings'")
    if not isinstance(vals, list) or not vals:
        raise InvalidParameterError("'couplings' must be a non-empty list")
    return [float(v) for v in vals]


def _time_grid(cfg: dict[str, Any]) -> np.ndarray:
    if "t_grid" in cfg:
        return np.asarray(cfg["t_grid"], float)
    return np.linspace(0.0, float(cfg.get("t_max", 10.0)), int(cfg.get("n_t", 101)))


def _suffixed(name: str, k: int, n: int) -> str:
    return name if n == 1 else name.replace(".csv", f"_{k}.csv")


# ---------------------------------------------------------------------------
# commands


def cmd_spectrum(cfg: dict[str, Any], out: Path) -> RunResult:
    res = RunResult()
    lams = _couplings(cfg)
    for k, lam in enumerate(lams):
        p = _model(cfg, lam)
        K = int(cfg.get("K", p.dim))
        superop, basis = lm.restricted_superoperator(p, K, cfg.get("delta_max"))
        spec = spc.diagonalize(superop, basis.parity_superoperator())
        pairs = spc.detect_pairs(spec, float(cfg.get("pair_tol", 1e-6)), int(cfg.get("leading", 12)))
        pair_id = np.full(len(spec), -1)
        for j, (a, b, _) in enumerate(pairs.pairs):
            pair_id[a] = pair_id[b] = j
        idx = np.arange(len(spec)) if cfg.get("all_eigenvalues", False) else spec.reported()
        if "max_rows" in cfg:
            idx = idx[: int(cfg["max_rows"])]
        name = _suffixed("spectrum.csv", k, len(lams))
        lam_v = spec.eigenvalues
        write_csv(out / name, ("re", "im", "sector", "pair_id"),
                  ((lam_v[i].real, lam_v[i].imag, spec.sector[i], pair_id[i]) for i in idx))
        res.files.append(name)
        res.checks.append(_check(f"trace preservation (Lambda={lam})", _left_null_residual(superop), 1e-10))
        res.summary[f"pairs_lambda_{lam}"] = len(pairs)
    return res


def _left_null_residual(superop: lm.SuperOperator) -> float:
    """``|vec(I)^T M|`` restricted to the stored index set."""
    flat = superop.flat_indices()
    d = superop.dim
    ones = (flat // d == flat % d).astype(float)
    scale = max(1.0, float(np.abs(superop.matrix).max()))
    return float(np.abs(ones @ superop.matrix).max()) / scale


def cmd_gap_scan(cfg: dict[str, Any], out: Path) -> RunResult:
    res = RunResult()
    lams = cfg.get("couplings")
    if lams is None:
        lams = np.linspace(float(cfg["coupling_min"]), float(cfg["coupling_max"]), int(cfg["n_coupling"])).tolist()
    template = _model(cfg, float(lams[0]))
    rows = spc.gap_scan(template, lams, int(cfg["K"]), cfg.get("delta_max"))
    write_csv(out / "gap_scan.csv", ("lambda_coupling", "re_lp1", "re_lm0", "im_lm0"),
              ((r.coupling, r.lambda_plus_1.real, r.lambda_minus_0.real, r.lambda_minus_0.imag) for r in rows))
    res.files.append("gap_scan.csv")
    worst = max(max(r.lambda_plus_1.real, r.lambda_minus_0.real) for r in rows)
    res.checks.append(_check("left half-plane", max(worst, 0.0), 1e-8))
    return res


def _density_checks(name: str, rho: np.ndarray, res: RunResult) -> None:
    res.checks.append(_check(f"{name}: trace", abs(np.trace(rho).real - 1.0), 1e-10))
    res.checks.append(_check(f"{name}: Hermiticity", float(np.abs(rho - rho.conj().T).max()), 1e-10))
    res.checks.append(_check(f"{name}: positivity", max(0.0, -float(np.linalg.eigvalsh(rho)[0])), 1e-8))


def cmd_stationary(cfg: dict[str, Any], out: Path) -> RunResult:
    res = RunResult()
    p = _model(cfg)
    K = int(cfg.get("K", p.dim))
    superop, basis = lm.restricted_superoperator(p, K, cfg.get("delta_max"))
    spec = spc.diagonalize(superop, basis.parity_superoperator())
    rho = spc.stationary_state(spec)
    _density_checks("stationary state", rho, res)
    sx, weights = spc.sx_basis_diagonal(rho, p.S)
    columns = [sx / p.S, weights]
    header = ["sx", "weight"]
    try:
        k_minus = spc.sector_leading(spec, -1)
        broken = spc.symmetry_broken_state(spec, p.S)
        columns.append(spc.sx_basis_diagonal(broken, p.S)[1])
        header.append("weight_broken")
        res.summary["lambda_minus_0"] = [spec.eigenvalues[k_minus].real, spec.eigenvalues[k_minus].imag]
    except DlmgError as exc:
        res.summary["broken_combination"] = f"unavailable: {exc}"
    write_csv(out / "stationary.csv", header, zip(*columns))
    res.files.append("stationary.csv")
    energies_rho = basis.project(rho)
    res.summary["gibbs_fit_temperature"] = spc.fit_gibbs_temperature(energies_rho, basis.energies)
    if p.coupling != 1.0:
        res.summary["stationary_temperature_hp"] = hp.stationary_temperature(p.coupling, p.T)[0]
    return res


def _dynamics_specs(cfg: dict[str, Any], p: lm.ModelParams) -> list[dy.InitialStateSpec]:
    kind = cfg.get("kind", "rotated_stretched")
    if "thetas" in cfg:
        thetas = [float(x) for x in cfg["thetas"]]
    elif "theta_offsets" in cfg:
        theta0 = hp.semiclassical_magnetization(p.coupling)[0]
        thetas = [theta0 + float(x) for x in cfg["theta_offsets"]]
    else:
        thetas = [float(cfg.get("theta", 0.0))]
    return [dy.InitialStateSpec(kind, th) for th in thetas]


def cmd_dynamics(cfg: dict[str, Any], out: Path) -> RunResult:
    res = RunResult()
    p = _model(cfg)
    t = _time_grid(cfg)
    specs = _dynamics_specs(cfg, p)
    K = cfg.get("K")
    for k, spec in enumerate(specs):
        rho0 = dy.initial_state(p, spec)
        traj = dy.evolve(p, rho0, t, rtol=float(cfg.get("rtol", 1e-8)), atol=float(cfg.get("atol", 1e-10)),
                         K=None if K is None else int(K))
        name = _suffixed("dynamics.csv", k, len(specs))
        write_csv(out / name, ("t", "sx", "sy", "sz", "energy", "trace_err", "min_eig"),
                  zip(traj.times, traj.sx, traj.sy, traj.sz, traj.energy, traj.trace_err, traj.min_eig))
        res.files.append(name)
        res.checks.append(_check(f"trajectory {k}: trace", float(traj.trace_err.max()), dy.TRACE_TOL))
        res.checks.append(_check(f"trajectory {k}: positivity", max(0.0, -float(np.nanmin(traj.min_eig))), 1e-8))
        res.summary[f"theta_{k}"] = spec.theta
        res.summary[f"steps_{k}"] = traj.n_steps
        if K is not None:
            res.summary[f"truncation_loss_{k}"] = traj.truncation_loss
    if cfg.get("analytic", p.coupling < 1.0 and len(specs) == 1):
        res.files.extend(_write_analytic(p, specs[0].theta, t, out))
    return res


def _write_analytic(p: lm.ModelParams, theta: float, t: np.ndarray, out: Path) -> list[str]:
    rows = []
    for tk in t:
        e_full, e_inf = hp.energy_expectation_hp(p.coupling, p.T, p.gamma, tk, theta, p.S)
        mx, my, mz = hp.magnetization_hp(p.coupling, p.T, p.gamma, tk, theta, p.S)
        rows.append((tk, mx, my, mz, e_full, e_inf, hp.temperature_t(p.coupling, p.T, p.gamma, tk)))
    write_csv(out / "analytic.csv", ("t", "mx", "my", "mz", "energy", "energy_no_fs", "T_S"), rows)
    return ["analytic.csv"]


def cmd_analytic(cfg: dict[str, Any], out: Path) -> RunResult:
    res = RunResult()
    p = _model(cfg)
    res.files.extend(_write_analytic(p, float(cfg.get("theta", 1.0 / math.sqrt(p.S))), _time_grid(cfg), out))
    hpp = hp.hp_params(p.coupling, p.T)
    res.checks.append(_check("B_-^2 - B_+^2 = m_z", abs(hpp.b_minus**2 - hpp.b_plus**2 - hpp.m_z), 1e-12))
    res.summary["omega_b"] = hpp.omega_b
    res.summary["stationary_temperature"] = hp.stationary_temperature(p.coupling, p.T)[0]
    return res


def cmd_oracle(cfg: dict[str, Any], out: Path) -> RunResult:
    res = RunResult()
    lam, gamma, T = float(cfg["coupling"]), float(cfg["gamma"]), float(cfg["T"])
    n_max = int(cfg.get("n_max", bo.DEFAULT_N_MAX))
    spec = bo.oracle_spectrum(lam, gamma, T, n_max)
    idx = spec.reported()
    if "max_rows" in cfg:
        idx = idx[: int(cfg["max_rows"])]
    write_csv(out / "oracle_spectrum.csv", ("re", "im", "sector"),
              ((spec.eigenvalues[i].real, spec.eigenvalues[i].imag, spec.sector[i]) for i in idx))
    res.files.append("oracle_spectrum.csv")
    st = bo.oracle_stationary(lam, gamma, T, n_max)
    z = tq.z_matrix(lam, gamma, T)
    res.summary.update(n_mean=st.n_mean, bb=[st.bb.real, st.bb.imag], z12=z.z12.real, z11=[z.z11.real, z.z11.imag])
    _density_checks("oracle stationary state", st.rho, res)
    return res


# ---------------------------------------------------------------------------
# audit


AUDIT_DEFAULTS = {"S": 4, "coupling": 0.5, "gamma": 0.2, "T": 4.0}


def _audit_checks(cfg: dict[str, Any]) -> list[Check]:
    cfg = {**AUDIT_DEFAULTS, **cfg}
    rng = np.random.default_rng(int(cfg.get("seed", 0)))
    checks: list[Check] = []
    p = _model(cfg)

    # spin model
    sup = lm.lindblad_superoperator(p)
    checks.append(_check("vec(I) left null vector", _left_null_residual(sup), 1e-10))
    rho = rng.normal(size=(p.dim, p.dim)) + 1j * rng.normal(size=(p.dim, p.dim))
    act = lm.lindblad_action(p, rho)
    checks.append(_check("superoperator matches action",
                         float(np.abs(sup.matrix @ rho.reshape(-1) - act.reshape(-1)).max()), 1e-10))
    par = lm.parity_superoperator(p.S).matrix
    checks.append(_check("[Ad_P, L] = 0", float(np.abs(par @ sup.matrix - sup.matrix @ par).max()), 1e-10))
    spec = spc.diagonalize(sup, lm.parity_superoperator(p.S))
    checks.append(_check("left half-plane spectrum", max(0.0, float(spec.eigenvalues.real.max())), 1e-8))
    rho_ss = spc.stationary_state(spec)
    checks.append(_check("stationary: L rho = 0", float(np.abs(lm.lindblad_action(p, rho_ss)).max()), 1e-8))
    checks.append(_check("stationary: trace", abs(np.trace(rho_ss).real - 1.0), 1e-10))
    checks.append(_check("stationary: Hermiticity", float(np.abs(rho_ss - rho_ss.conj().T).max()), 1e-10))
    checks.append(_check("stationary: positivity", max(0.0, -float(np.linalg.eigvalsh(rho_ss)[0])), 1e-10))
    traj = dy.evolve(p, dy.initial_state(p, dy.InitialStateSpec("rotated_stretched", 0.3)), np.linspace(0, 2, 21))
    checks.append(_check("trajectory: trace", float(traj.trace_err.max()), dy.TRACE_TOL))
    checks.append(_check("trajectory: Hermiticity", float(traj.hermiticity_err.max()), 1e-10))
    checks.append(_check("trajectory: positivity", max(0.0, -float(traj.min_eig.min())), 1e-8))

    # analytic
    if p.coupling == 1.0:
        checks.append(Check("analytic and oracle checks", None, note="skipped: critical point Lambda = 1"))
        return checks
    worst_m, worst_r, worst_u = 0.0, 0.0, 0.0
    for _ in range(int(cfg.get("n_random", 200))):
        lam = float(rng.uniform(0.0, 3.0))
        if abs(lam - 1.0) < 1e-3:
            continue
        T = float(rng.uniform(0.2, 10.0))
        q = hp.hp_params(lam, T)
        worst_m = max(worst_m, abs(q.b_minus**2 - q.b_plus**2 - q.m_z))
        worst_r = max(worst_r, abs(q.ratio - (4 * T - q.omega_b) / (4 * T + q.omega_b)))
        bp, bm = hp.jump_coefficients_unsimplified(q.m_z, q.phi_b, T)
        worst_u = max(worst_u, abs(bp - q.b_plus), abs(bm - q.b_minus))
    checks.append(_check("B_-^2 - B_+^2 = m_z", worst_m, 1e-12))
    checks.append(_check("B_+/B_- = (4T - w)/(4T + w)", worst_r, 1e-12))
    checks.append(_check("simplified B = rotated B", worst_u, 1e-12))
    x = hp.occupation_ratio(p.coupling, p.T)
    z0 = tq.z_matrix(p.coupling, 0.0, p.T)
    checks.append(_check("Z12(gamma=0) = x/(1-x)", abs(z0.z12 - x / (1 - x)), 1e-10))
    omega = hp.mode_frequency(p.coupling)
    m_z = hp.semiclassical_magnetization(p.coupling)[1][2]
    bpl, bmi = tq.rapidities(p.coupling, 3.0 * omega / m_z)
    checks.append(_check("overdamped rapidities are real", max(abs(bpl.imag), abs(bmi.imag)), 1e-12))
    n_max = int(cfg.get("n_max", 120))
    gamma_o = float(cfg.get("oracle_gamma", 0.3))
    targets = [tq.eigenvalue_lattice(p.coupling, gamma_o, a, b) for a in range(3) for b in range(3) if a + b <= 2]
    got = bo.eigenvalues_near(p.coupling, gamma_o, p.T, n_max, targets)
    checks.append(_check("oracle vs rapidity lattice", float(np.abs(got - np.array(targets)).max()), 1e-6))
    if p.coupling < 1.0:
        dis = bo.a_plus_disambiguation(p.coupling, p.T)
        checks.append(_check("A_+ limit = stationary Fock ratio", dis["squared"], 1e-8))
        # the B_+ (unsquared) numerator must be rejected by the same comparison
        checks.append(Check("A_+ with B_+ numerator rejected", bool(dis["linear"] > 1e-8), dis["linear"], 1e-8,
                            "residual must exceed tolerance"))
    return checks


def cmd_audit(cfg: dict[str, Any], out: Path) -> RunResult:
    res = RunResult()
    res.checks = _audit_checks(cfg)
    for c in res.checks:
        print(c.line())
    with open(out / "audit.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("check", "status", "residual", "tolerance"))
        for c in res.checks:
            status = "skip" if c.passed is None else ("pass" if c.passed else "fail")
            w.writerow((c.name, status, _fmt(c.residual), _fmt(c.tolerance)))
    res.files.append("audit.csv")
    return res


HANDLERS: dict[str, Callable[[dict[str, Any], Path], RunResult]] = {
    "spectrum": cmd_spectrum,
    "gap-scan": cmd_gap_scan,
    "stationary": cmd_stationary,
    "dynamics": cmd_dynamics,
    "analytic": cmd_analytic,
    "oracle": cmd_oracle,
    "audit": cmd_audit,
}


# ---------------------------------------------------------------------------
# entry point


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else str(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def run(command: str, config_path: str | Path, out_dir: str | Path = ".") -> int:
    out = Path(out_dir)
    start = time.perf_counter()
    manifest: dict[str, Any] = {
        "command": command,
        "config_path": str(config_path),
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    code = EXIT_OK
    try:
        out.mkdir(parents=True, exist_ok=True)
        try:
            with open(config_path, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidParameterError(f"cannot read config: {exc}") from None
        if not isinstance(cfg, dict):
            raise InvalidParameterError("config must be a JSON object")
        if cfg.get("command", command) != command:
            raise InvalidParameterError(f"config is for {cfg['command']!r}, not {command!r}")
        manifest["config"] = cfg
        res = HANDLERS[command](cfg, out)
        manifest["files"] = res.files
        manifest["summary"] = res.summary
        manifest["invariants"] = [
            {"name": c.name, "passed": c.passed, "residual": c.residual, "tolerance": c.tolerance, "note": c.note}
            for c in res.checks
        ]
        if any(c.passed is False for c in res.checks):
            code = EXIT_INVARIANT
        manifest["status"] = "invariant_violation" if code else "ok"
    except (DlmgError, KeyError, TypeError, ValueError, MemoryError) as exc:
        code = EXIT_ERROR
        manifest["status"] = "error"
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        print(f"error: {exc}", file=sys.stderr)
    manifest["wall_time_s"] = time.perf_counter() - start
    try:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
            json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:  # pragma: no cover - unwritable output directory
        print(f"error: cannot write manifest: {exc}", file=sys.stderr)
        code = EXIT_ERROR
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dlmg", description="Dissipative LMG model: exact numerics and analytics.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON configuration file")
    parser.add_argument("--out", default=".", help="output directory (default: current directory)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; 2 is reserved for invariant violations
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    return run(args.command, args.config, args.out)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
