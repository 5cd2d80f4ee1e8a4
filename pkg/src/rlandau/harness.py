"""Orchestration: subcommand pipelines, artifact persistence, reports.

Each subcommand builds its inputs from the validated run config, writes
its outputs into ``run.output_dir``, and records a manifest listing the
config hash and every produced file.  All CSV output uses fixed column
orders and full-precision decimal floats, so identical configs produce
byte-identical artifacts.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .collision import CollisionOperator, KernelTable, kernel_phi
from .config import config_hash
from .equilibrium import FluidState, juttner
from .euler_fluid import EulerState, diagnostics_Z, euler_step
from .hilbert import HilbertExpansion, decay_check
from .linearized import LinearizedOperator
from .phase_space import MomentumGrid, SpatialGrid
from .remainder import SweepError, SweepResult, knudsen_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PREREQ = 3
EXIT_NUMERICAL = 4


class PrerequisiteError(RuntimeError):
    """A required artifact from an earlier subcommand is missing."""


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def write_manifest(outdir: Path, name: str, cfg: dict, inputs, outputs) -> Path:
    manifest = {
        "subcommand": name,
        "config_hash": config_hash(cfg),
        "inputs": sorted(str(p) for p in inputs),
        "outputs": sorted(str(p) for p in outputs),
    }
    path = outdir / f"{name}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# -- shared builders ---------------------------------------------------------


def momentum_grid(cfg: dict) -> MomentumGrid:
    return MomentumGrid(
        float(cfg["momentum"]["radius"]), cfg["momentum"]["points_per_axis"]
    )


def build_table(cfg: dict) -> KernelTable:
    grid = momentum_grid(cfg)
    eta = cfg["collision"]["eta_reg"]
    cache = cfg["collision"]["table_cache_path"]
    key = (
        grid.radius,
        grid.points_per_axis,
        grid.size,
        eta if eta is not None else -1.0,
    )
    if cache is not None:
        p = Path(cache)
        if p.is_file():
            data = np.load(p)
            if np.array_equal(data["key"], np.asarray(key)):
                table = KernelTable.__new__(KernelTable)
                table.grid = grid
                table.eta = float(data["eta"])
                table.phi = data["phi"]
                table.react = data["react"]
                return table
    table = KernelTable(grid, eta=eta)
    if cache is not None:
        p = Path(cache)
        p.parent.mkdir(parents=True, exist_ok=True)
        np.savez(
            p, key=np.asarray(key), eta=table.eta, phi=table.phi, react=table.react
        )
    return table


def wave_backbone(cfg: dict) -> EulerState:
    g = SpatialGrid(cfg["space"]["cells"], float(cfg["space"]["length"]))
    amp = float(cfg["euler"]["amplitude"])
    base_T = float(cfg["euler"]["base_temperature"])
    phase = 2 * np.pi * g.x / g.length
    n0 = 1.0 + amp * np.sin(phase)
    u = np.zeros((g.cells, 3))
    u[:, 0] = amp * np.cos(phase)
    T0 = base_T + amp * np.sin(phase)
    return EulerState(g, n0, u, T0)


def build_expansion(cfg: dict, table: KernelTable | None = None) -> HilbertExpansion:
    if table is None:
        table = build_table(cfg)
    return HilbertExpansion(
        wave_backbone(cfg),
        table,
        k=cfg["hilbert"]["k"],
        cg_tol=float(cfg["linearized"]["cg_tol"]),
        tau=float(cfg["hilbert"]["fd_tau"]),
        eps4=float(cfg["euler"]["eps4"]),
    )


def _outdir(cfg: dict) -> Path:
    out = Path(cfg["run"]["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- subcommands -------------------------------------------------------------


def _sample_on_shell_pairs(rng, n, radius):
    p = rng.uniform(-radius, radius, size=(n, 3))
    q = rng.uniform(-radius, radius, size=(n, 3))
    return p, q


def run_check_kernel(cfg: dict) -> int:
    out = _outdir(cfg)
    rng = np.random.default_rng(cfg["run"]["seed"])
    grid = momentum_grid(cfg)
    p, q = _sample_on_shell_pairs(rng, 10_000, grid.radius)
    kv = kernel_phi(p, q)
    phat = p / np.sqrt(1.0 + np.sum(p * p, axis=-1))[:, None]
    qhat = q / np.sqrt(1.0 + np.sum(q * q, axis=-1))[:, None]
    proj = np.einsum("kij,kj->ki", kv.phi, qhat - phat)
    scale = np.linalg.norm(kv.phi, axis=(1, 2))
    proj_defect = float(
        (np.linalg.norm(proj, axis=1) / np.maximum(scale, 1e-300)).max()
    )
    min_eig = float(np.linalg.eigvalsh(kv.phi).min())

    table = build_table(cfg)
    state = FluidState(1.0, np.zeros(3), float(cfg["euler"]["base_temperature"]))
    cop = CollisionOperator(table, float(state.gamma), state.u)
    M = juttner(state, grid.nodes)
    cmm = cop.bilinear(M, M)
    # peak magnitude of the diffusion flux term, the natural collision scale
    sig = cop.table.sigma(M)
    flux = np.einsum("nij,jn->in", sig, cop.inner.apply(M))
    peak = float(np.abs(cop.kinetic.div_adjoint(flux)).max())
    pert = M * (1.0 + 0.05 * np.sin(grid.nodes[:, 0]))
    mass, mom, energy = cop.invariant_residuals(pert, pert)
    cons_max = float(max(abs(mass), np.abs(mom).max(), abs(energy)))

    rows = [
        ("projection_identity_max_defect", proj_defect),
        ("min_eigenvalue", min_eig),
        ("equilibrium_annihilation_max", float(np.abs(cmm).max())),
        ("collision_peak_scale", peak),
        ("conservation_residual_max", cons_max),
    ]
    path = out / "kernel_checks.csv"
    write_csv(path, ["metric", "value"], rows)
    write_manifest(out, "check-kernel", cfg, [], [path])
    return EXIT_OK


def run_check_linearized(cfg: dict) -> int:
    out = _outdir(cfg)
    state = FluidState(1.0, np.zeros(3), float(cfg["euler"]["base_temperature"]))

    def suite(points):
        # fresh generator per resolution: the delta fit below is a minimum
        # over sampled trial directions, so both grids must see the same
        # trial set for the cross-grid stability comparison to be meaningful
        rng = np.random.default_rng(cfg["run"]["seed"])
        sub = {**cfg, "momentum": {**cfg["momentum"], "points_per_axis": points}}
        grid = momentum_grid(sub)
        lin = LinearizedOperator(build_table(sub), state)
        basis = lin.null_basis()
        null_max = max(
            float(np.abs(lin.apply_L(b)).max())
            / max(float(np.abs(b).max()), 1e-300)
            for b in basis
        )
        f = lin.project_out_null(rng.normal(size=grid.size) * lin.sqrt_M)
        g = lin.project_out_null(rng.normal(size=grid.size) * lin.sqrt_M)
        lf, lg = lin.apply_L(f), lin.apply_L(g)
        sym = abs(grid.integrate(g * lf) - grid.integrate(f * lg)) / max(
            abs(grid.integrate(g * lf)), 1e-300
        )
        # smooth trial family: the fitted delta is a minimum over trial
        # directions, so only modes resolved on both grids may take part
        # (|k| <= 1), and a dedicated generator keeps the trial sequence
        # independent of grid size
        drng = np.random.default_rng(cfg["run"]["seed"])
        delta = np.inf
        for _ in range(200):
            kvec = drng.normal(size=3)
            knorm = float(np.linalg.norm(kvec))
            if knorm > 1.0:
                kvec /= knorm
            h = lin.sqrt_M * (1 + np.sin(grid.nodes @ kvec)) * drng.normal()
            rem = lin.project_out_null(h)
            s = lin.sigma_norm(rem)
            if s > 1e-10:
                delta = min(delta, grid.integrate(h * lin.apply_L(h)) / s**2)
        return null_max, sym, delta

    n = cfg["momentum"]["points_per_axis"]
    res = {n: suite(n), n - 2: suite(n - 2)}
    rows = []
    for points, (null_max, sym, delta) in sorted(res.items()):
        rows.append((f"null_annihilation_max_n{points}", null_max))
        rows.append((f"self_adjointness_defect_n{points}", sym))
        rows.append((f"coercivity_delta_n{points}", delta))
    path = out / "linearized_checks.csv"
    write_csv(path, ["metric", "value"], rows)
    write_manifest(out, "check-linearized", cfg, [], [path])
    return EXIT_OK


def run_euler_solve(cfg: dict) -> int:
    out = _outdir(cfg)
    state = wave_backbone(cfg)
    dt = float(cfg["euler"]["dt"])
    t_final = float(cfg["euler"]["t_final"])
    cfl = float(cfg["euler"]["cfl"])
    eps4 = float(cfg["euler"]["eps4"])
    steps = int(round(t_final / dt))
    snaps = [(0.0, state)]
    t = 0.0
    for s in range(steps):
        state = euler_step(state, dt, cfl=cfl, eps4=eps4)
        t += dt
    snaps.append((t, state))
    rows = []
    for tt, st in snaps:
        for c in range(st.grid.cells):
            rows.append(
                (tt, st.grid.x[c], st.n0[c], st.u[c, 0], st.u[c, 1], st.u[c, 2], st.T0[c])
            )
    path = out / "euler_fields.csv"
    write_csv(path, ["t", "x", "n0", "u1", "u2", "u3", "T0"], rows)
    weight_T = float(cfg["weights"]["T_margin"]) * float(state.T0.max())
    diag = diagnostics_Z(state, max(t, dt), weight_T, eps4=eps4)
    dpath = out / "euler_diagnostics.csv"
    write_csv(
        dpath,
        ["metric", "value"],
        [
            ("Z", diag.Z),
            ("Zcal", diag.Zcal),
            ("Y_floor", diag.Y_floor),
            ("window_ok", float(diag.window_ok)),
        ],
    )
    write_manifest(out, "euler-solve", cfg, [], [path, dpath])
    return EXIT_OK


SNAPSHOT_NAME = "hilbert_coefficients.npz"


def run_hilbert_build(cfg: dict) -> int:
    out = _outdir(cfg)
    hx = build_expansion(cfg)
    fields = hx.coefficients()
    rows = []
    for n in range(hx.orders):
        resid, scale = hx.hierarchy_residual(n)
        rows.append((f"residual_order_{n}", resid, scale))
    exponent = float(cfg["hilbert"]["decay_exponent"])
    for f in fields[1:]:
        rep = decay_check(f, hx.t, hx.euler, hx.grid, exponent=exponent)
        rows.append((f"decay_constant_order_{f.n}", rep.constant, float(rep.boundary_dominated)))
    spath = out / SNAPSHOT_NAME
    np.savez(
        spath,
        n0=hx.euler.n0,
        u=hx.euler.u,
        T0=hx.euler.T0,
        y=hx.y,
        t=hx.t,
        values=np.stack([f.values for f in fields]),
        micro=np.stack([f.micro for f in fields]),
        macro=np.stack([f.macro for f in fields]),
        config_hash=config_hash(cfg),
    )
    cpath = out / "hilbert_summary.csv"
    write_csv(cpath, ["metric", "value", "scale"], rows)
    write_manifest(out, "hilbert-build", cfg, [], [spath, cpath])
    return EXIT_OK


def _load_snapshot(cfg: dict) -> tuple[HilbertExpansion, Path]:
    out = Path(cfg["run"]["output_dir"])
    spath = out / SNAPSHOT_NAME
    mpath = out / "hilbert-build_manifest.json"
    if not spath.is_file() or not mpath.is_file():
        raise PrerequisiteError(
            f"missing Hilbert coefficients in {out} - run `hilbert-build` with "
            "this config first"
        )
    data = np.load(spath, allow_pickle=False)
    if str(data["config_hash"]) != config_hash(cfg):
        raise PrerequisiteError(
            "Hilbert snapshot was built from a different config - rerun "
            "`hilbert-build` with the current config"
        )
    table = build_table(cfg)
    g = SpatialGrid(cfg["space"]["cells"], float(cfg["space"]["length"]))
    euler = EulerState(g, data["n0"], data["u"], data["T0"])
    hx = HilbertExpansion(
        euler,
        table,
        k=cfg["hilbert"]["k"],
        cg_tol=float(cfg["linearized"]["cg_tol"]),
        tau=float(cfg["hilbert"]["fd_tau"]),
        eps4=float(cfg["euler"]["eps4"]),
    )
    hx.y = data["y"].copy()
    hx.t = float(data["t"])
    return hx, spath


def _sweep_rows(result: SweepResult):
    for r, eps in enumerate(result.epsilons):
        for j, t in enumerate(result.times):
            yield (
                eps,
                t,
                result.h2[r, j],
                result.E[r, j],
                result.D_integral[r, j],
                result.min_F[r, j],
            )


SWEEP_HEADER = ["epsilon", "t", "h2_norm", "E", "D_integral", "min_F"]


def _write_sweep_outputs(out: Path, cfg: dict, result: SweepResult):
    csv_path = out / "sweep_result.csv"
    write_csv(csv_path, SWEEP_HEADER, _sweep_rows(result))
    slope_path = out / "slope.txt"
    slope_path.write_text(
        ("degenerate" if result.slope is None else _fmt(result.slope)) + "\n"
    )
    meta_path = out / "sweep_meta.json"
    meta_path.write_text(
        json.dumps(
            {"peak_M": result.peak_M, "k": result.k, "C_fit": result.C_fit},
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    summary_path = out / "summary.md"
    summary_path.write_text(_render_summary(result))
    plots = _render_plots(out, result)
    return [csv_path, slope_path, meta_path, summary_path, *plots]


def _render_summary(result: SweepResult) -> str:
    lines = ["# Knudsen sweep summary", ""]
    if result.degenerate:
        lines += ["All norms vanish (constant backbone): slope is degenerate.", ""]
    else:
        ok = 0.7 <= result.slope <= 1.3
        lines += [
            f"Fitted log-log slope of sup_t ||F - M||_H2 vs epsilon: "
            f"{result.slope:.4f} ({'PASS' if ok else 'FAIL'}, window [0.7, 1.3])",
            "",
        ]
    lines.append(
        f"Energy growth constant C_fit = {result.C_fit:.6g} "
        f"(pattern E(t) <= E(0) + C eps^(2k+3) t, k = {result.k})"
    )
    min_f = float(result.min_F.min())
    tol = 1e-8 * result.peak_M
    lines.append(
        f"Minimum of reconstructed F over all runs: {min_f:.6g} "
        f"({'PASS' if min_f >= -tol else 'FAIL'}, tolerance -1e-8 x peak M = {-tol:.3g})"
    )
    lines.append("")
    lines.append("| epsilon | sup_t h2_norm | max E | final int D | min F |")
    lines.append("|---|---|---|---|---|")
    for r, eps in enumerate(result.epsilons):
        lines.append(
            f"| {eps:g} | {result.h2[r].max():.6g} | {result.E[r].max():.6g} "
            f"| {result.D_integral[r, -1]:.6g} | {result.min_F[r].min():.6g} |"
        )
    lines.append("")
    return "\n".join(lines)


def _render_plots(out: Path, result: SweepResult):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []
    if not result.degenerate:
        fig, ax = plt.subplots(figsize=(5, 4))
        sup = result.sup_h2
        ax.loglog(result.epsilons, sup, "o-", label="sup_t ||F - M||_H2")
        ref = sup[0] * np.asarray(result.epsilons) / result.epsilons[0]
        ax.loglog(result.epsilons, ref, "k--", label="slope 1 reference")
        ax.set_xlabel("epsilon")
        ax.set_ylabel("H2 distance")
        ax.legend()
        ax.set_title(f"fitted slope {result.slope:.3f}")
        fig.tight_layout()
        p = out / "convergence_loglog.png"
        fig.savefig(p, dpi=120)
        plt.close(fig)
        paths.append(p)
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for r, eps in enumerate(result.epsilons):
        axes[0].plot(result.times, result.E[r], label=f"eps = {eps:g}")
        axes[1].plot(result.times, result.D_integral[r], label=f"eps = {eps:g}")
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("E(t)")
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("int_0^t D ds")
    for ax in axes:
        ax.legend()
    fig.tight_layout()
    p = out / "energy_time_series.png"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    paths.append(p)
    return paths


def run_knudsen_sweep(cfg: dict) -> int:
    out = _outdir(cfg)
    hx, spath = _load_snapshot(cfg)
    try:
        result = knudsen_sweep(
            hx,
            epsilons=cfg["sweep"]["epsilons"],
            t_final=float(cfg["solver"]["t_final"]),
            dt=float(cfg["solver"]["dt"]),
            imex_order=cfg["solver"]["imex_order"],
            init=cfg["solver"]["init"],
            tau=float(cfg["solver"]["tau"]),
            margin=float(cfg["solver"]["margin"]),
            cg_tol=float(cfg["solver"]["cg_tol"]),
        )
    except SweepError as exc:
        outputs = _write_sweep_outputs(out, cfg, exc.partial)
        write_manifest(out, "knudsen-sweep", cfg, [spath], outputs)
        print(f"sweep failed: {exc}")
        return EXIT_NUMERICAL
    outputs = _write_sweep_outputs(out, cfg, result)
    write_manifest(out, "knudsen-sweep", cfg, [spath], outputs)
    return EXIT_OK


def run_report(cfg: dict) -> int:
    out = _outdir(cfg)
    csv_path = out / "sweep_result.csv"
    if not csv_path.is_file():
        raise PrerequisiteError(
            f"missing {csv_path} - run `knudsen-sweep` with this config first"
        )
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SWEEP_HEADER:
            raise PrerequisiteError("sweep_result.csv has an unexpected column set")
        rows = [
            {k: float(v) for k, v in row.items()} for row in reader
        ]
    if not rows:
        raise PrerequisiteError("sweep_result.csv holds no data rows")
    epsilons = sorted({row["epsilon"] for row in rows}, reverse=True)
    times = sorted({row["t"] for row in rows})
    shape = (len(epsilons), len(times))
    arr = {key: np.zeros(shape) for key in ("h2_norm", "E", "D_integral", "min_F")}
    for row in rows:
        r = epsilons.index(row["epsilon"])
        j = times.index(row["t"])
        for key in arr:
            arr[key][r, j] = row[key]
    sup = arr["h2_norm"].max(axis=1)
    degenerate = bool(np.all(sup < 1e-300))
    slope = (
        None
        if degenerate
        else float(np.polyfit(np.log(epsilons), np.log(sup), 1)[0])
    )
    meta_path = out / "sweep_meta.json"
    peak_M = 0.0
    k = cfg["hilbert"]["k"]
    inputs = [csv_path]
    if meta_path.is_file():
        meta = json.loads(meta_path.read_text())
        peak_M = float(meta.get("peak_M", 0.0))
        k = int(meta.get("k", k))
        inputs.append(meta_path)
    result = SweepResult(
        epsilons=tuple(epsilons),
        times=np.asarray(times),
        h2=arr["h2_norm"],
        E=arr["E"],
        D_integral=arr["D_integral"],
        min_F=arr["min_F"],
        slope=slope,
        degenerate=degenerate,
        C_fit=0.0,
        k=k,
        peak_M=peak_M,
    )
    from .remainder import _fit_C

    result.C_fit = _fit_C(result)
    outputs = _write_sweep_outputs(out, cfg, result)
    write_manifest(out, "report", cfg, inputs, outputs)
    return EXIT_OK


SUBCOMMANDS = {
    "check-kernel": run_check_kernel,
    "check-linearized": run_check_linearized,
    "euler-solve": run_euler_solve,
    "hilbert-build": run_hilbert_build,
    "knudsen-sweep": run_knudsen_sweep,
    "report": run_report,
}


def run_subcommand(name: str, cfg: dict) -> int:
    return SUBCOMMANDS[name](cfg)
