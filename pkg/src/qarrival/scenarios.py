"""Scenario implementations behind the CLI `run` subcommand.

Each scenario consumes a validated config, writes CSV artifacts into the
output directory, and returns a manifest fragment (artifact paths plus any
warnings).  Sweeps parallelize across rungs only, never inside a rung's
time loop, so deterministic mode stays trivially deterministic.
"""

import csv
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .textio import fnum
from .absorber import (ladder_csv_rows, limit_ladder, oracle_for_mode,
                       run_absorption, run_absorption_radial3d)
from .bohm import (ensemble_arrivals, free_snapshot_store,
                   store_from_snapshots)
from .config import ConfigError, build_grid, build_packet, histogram_edges
from .errors import ConfigurationError
from .fields import Grid
from .gaussians import GaussianPacket, reference_speed, to_wave_field
from .histogram import HistogramSpec
from .metrics import chi_square_pvalue, ks_statistic_binned, loglog_slope, tv_distance
from .oracles import abr_reflection, cross_section_histogram, step_coefficients, \
    time_delay_leading
from .propagate import EvolutionConfig
from .regions import ellipsoid_region, sphere_region
from .streams import seeded_stream
from .units import NATURAL
from .zeno import ZenoConfig, run_zeno
from . import dirac as dr


def _writer(out_dir, name):
    path = os.path.join(out_dir, name)
    return path


def _write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in rows:
            w.writerow(row)


def _evolution_cfg(cfg):
    evo = cfg.get("evolution", {})
    return EvolutionConfig(
        dt=float(evo.get("dt", 0.1)),
        edge_threshold=float(evo.get("edge_threshold", 1e-6)))


def run_scenario(kind, cfg, out_dir, deterministic=False, threads=1):
    os.makedirs(out_dir, exist_ok=True)
    fn = {
        "absorber-1d": scenario_absorber_1d,
        "absorber-3d": scenario_absorber_3d,
        "absorber-ellipsoid": scenario_absorber_ellipsoid,
        "zeno-1d": scenario_zeno,
        "zeno-3d": scenario_zeno,
        "bohm-ensemble": scenario_bohm_ensemble,
        "dirac-suite": scenario_dirac_suite,
        "oracle-table": scenario_oracle_table,
        "classical-nosignal": scenario_classical_nosignal,
    }[kind]
    return fn(cfg, out_dir, deterministic=deterministic, threads=threads)


# ---------------------------------------------------------------------------
# Absorber scenarios
# ---------------------------------------------------------------------------

def scenario_absorber_1d(cfg, out_dir, deterministic=False, threads=1):
    packet = build_packet(cfg, 1)
    det = cfg.get("detector", {})
    artifacts, warnings = [], []

    if "ladder" in cfg:
        ladder = [tuple(map(float, rung)) for rung in cfg["ladder"]]
        lad = cfg.get("ladder_opts", {})
        rungs = limit_ladder(
            packet, ladder, dt=float(cfg.get("evolution", {}).get("dt", 0.1)),
            dx_target=float(lad.get("dx_target", 0.1)),
            margin=float(lad.get("margin", 80.0)),
            tau_max=float(lad.get("tau_max", 4.0)),
            n_tau=int(lad.get("n_tau", 80)), mode="1d")
        path = _writer(out_dir, "ladder.csv")
        _write_rows(path, ladder_csv_rows(rungs, deterministic))
        artifacts.append(path)
        return {"artifacts": artifacts, "warnings": warnings,
                "tv_final": rungs[-1].tv}

    R = float(det.get("R", 0) or _missing("detector.R"))
    lam = float(det.get("lam", 0) or _missing("detector.lam"))
    grid = build_grid(cfg, 1)
    n_u, rho_edges, tau_edges = histogram_edges(cfg)
    spec = HistogramSpec(dim=1, rho_edges=rho_edges, tau_edges=tau_edges)
    evo = _evolution_cfg(cfg)
    t_max = float(cfg.get("evolution", {}).get("t_max", 0) or
                  _missing("evolution.t_max"))
    f = to_wave_field(packet, grid)
    v_ref = reference_speed(packet)
    snap_stride = int(cfg.get("snapshots", {}).get("stride", 0))
    res = run_absorption(f, sphere_region(1, R), lam, evo, t_max,
                         spec=spec, v_ref=v_ref,
                         snapshot_stride=snap_stride)
    if snap_stride:
        from .propagate import dump_field_csv
        from .fields import WaveField as _WF
        for t_snap, vals in res.snapshots:
            path = _writer(out_dir, f"field_t{t_snap:g}.csv")
            dump_field_csv(_WF(grid, vals), t_snap, path)
            artifacts.append(path)
    hist_path = _writer(out_dir, "histogram.csv")
    res.histogram.to_csv(hist_path)
    artifacts.append(hist_path)
    oracle = cross_section_histogram(packet, sphere_region(1, R), spec, v_ref)
    oracle_path = _writer(out_dir, "oracle.csv")
    oracle.to_csv(oracle_path)
    artifacts.append(oracle_path)
    warnings.extend(res.histogram.warnings)
    return {"artifacts": artifacts, "warnings": warnings,
            "tv": tv_distance(res.histogram.u_tau_marginal(),
                              oracle.u_tau_marginal()),
            "histogram_total": res.histogram.total,
            "mean_overshoot": res.record.mean_residence_time()}


def _missing(key):
    raise ConfigError(key, "missing")


def scenario_absorber_3d(cfg, out_dir, deterministic=False, threads=1):
    det = cfg.get("detector", {})
    R = float(det.get("R", 0) or _missing("detector.R"))
    lam = float(det.get("lam", 0) or _missing("detector.lam"))
    evo = _evolution_cfg(cfg)
    t_max = float(cfg.get("evolution", {}).get("t_max", 0) or
                  _missing("evolution.t_max"))
    mode = cfg.get("grid", {}).get("mode", "full")
    artifacts, warnings = [], []

    if mode == "radial":
        packet = build_packet(cfg, 3)
        grid = build_grid(cfg, 1)
        n_u, rho_edges, tau_edges = histogram_edges(cfg)
        spec = HistogramSpec(dim=1, rho_edges=rho_edges, tau_edges=tau_edges)
        res = run_absorption_radial3d(packet, R, lam, evo, t_max, grid,
                                      spec=spec)
        v_ref = res.histogram.v_ref
        oracle = oracle_for_mode(packet, R, spec, v_ref, "radial3d")
        tv = tv_distance(res.histogram.tau_marginal(), oracle.tau_marginal())
        extra = {"tv_tau": tv}
    else:
        packet = build_packet(cfg, 3)
        grid = build_grid(cfg, 3)
        n_u, rho_edges, tau_edges = histogram_edges(cfg)
        spec = HistogramSpec(dim=3, n_u=n_u, rho_edges=rho_edges,
                             tau_edges=tau_edges)
        f = to_wave_field(packet, grid)
        v_ref = reference_speed(packet)
        res = run_absorption(f, sphere_region(3, R), lam, evo, t_max,
                             spec=spec, v_ref=v_ref)
        u_marg = res.histogram.u_marginal()
        n_eff = 10000.0
        p_uniform = chi_square_pvalue(u_marg / max(u_marg.sum(), 1e-300) * n_eff)
        extra = {"u_marginal_uniform_p": p_uniform}
    hist_path = _writer(out_dir, "histogram.csv")
    res.histogram.to_csv(hist_path)
    artifacts.append(hist_path)
    warnings.extend(res.histogram.warnings)
    out = {"artifacts": artifacts, "warnings": warnings,
           "histogram_total": res.histogram.total}
    out.update(extra)
    return out


def scenario_absorber_ellipsoid(cfg, out_dir, deterministic=False, threads=1):
    det = cfg.get("detector", {})
    R = float(det.get("R", 0) or _missing("detector.R"))
    lam = float(det.get("lam", 0) or _missing("detector.lam"))
    axes = tuple(det.get("axes", (1.0, 1.0, 1.0)))
    evo = _evolution_cfg(cfg)
    t_max = float(cfg.get("evolution", {}).get("t_max", 0) or
                  _missing("evolution.t_max"))
    packet = build_packet(cfg, 3)
    grid = build_grid(cfg, 3)
    n_u, rho_edges, tau_edges = histogram_edges(cfg)
    spec = HistogramSpec(dim=3, n_u=n_u, rho_edges=rho_edges,
                         tau_edges=tau_edges)
    region = ellipsoid_region(R, axes)
    f = to_wave_field(packet, grid)
    v_ref = reference_speed(packet)
    res = run_absorption(f, region, lam, evo, t_max, spec=spec, v_ref=v_ref)
    oracle = cross_section_histogram(packet, region, spec, v_ref)
    hist_path = _writer(out_dir, "histogram.csv")
    res.histogram.to_csv(hist_path)
    oracle_path = _writer(out_dir, "oracle.csv")
    oracle.to_csv(oracle_path)
    return {"artifacts": [hist_path, oracle_path],
            "warnings": res.histogram.warnings,
            "tv": tv_distance(res.histogram.u_tau_marginal(),
                              oracle.u_tau_marginal()),
            "histogram_total": res.histogram.total}


# ---------------------------------------------------------------------------
# Zeno scenarios
# ---------------------------------------------------------------------------

def scenario_zeno(cfg, out_dir, deterministic=False, threads=1):
    dim = 1 if cfg["scenario"] == "zeno-1d" else 3
    det = cfg.get("detector", {})
    R = float(det.get("R", 0) or _missing("detector.R"))
    z = ZenoConfig(
        T_meas=float(det.get("T_meas", 0) or _missing("detector.T_meas")),
        sigma1=float(det.get("sigma1", 0) or _missing("detector.sigma1")),
        n_max=int(det.get("n_max", 0) or _missing("detector.n_max")),
        c1=float(det.get("c1", 3.0)), c2=float(det.get("c2", 1.0 / 3.0)))
    packet = build_packet(cfg, dim)
    grid = build_grid(cfg, dim)
    n_u, rho_edges, tau_edges = histogram_edges(cfg)
    spec = HistogramSpec(dim=dim, n_u=n_u, rho_edges=rho_edges,
                         tau_edges=tau_edges)
    evo = _evolution_cfg(cfg)
    f = to_wave_field(packet, grid)
    v_ref = reference_speed(packet)
    res = run_zeno(f, sphere_region(dim, R), z, evo, spec=spec, v_ref=v_ref,
                   oracle_packet=packet if isinstance(packet, GaussianPacket)
                   else None,
                   keep_detect_densities=bool(cfg.get("snapshots")))
    artifacts = []
    ledger_path = _writer(out_dir, "ledger.csv")
    res.ledger.to_csv(ledger_path)
    artifacts.append(ledger_path)
    hist_path = _writer(out_dir, "histogram.csv")
    res.histogram.to_csv(hist_path)
    artifacts.append(hist_path)
    # post-measurement branch snapshots, plotted like the step figures
    if dim == 1 and cfg.get("snapshots"):
        from .propagate import dump_field_csv
        from .fields import WaveField as _WF
        wanted = set(cfg["snapshots"].get("measurements", []))
        for n, weight, vals in res.detect_densities:
            if n in wanted:
                path = _writer(out_dir, f"field_detect_n{n}.csv")
                dump_field_csv(_WF(grid, vals), n * z.T_meas, path)
                artifacts.append(path)
    adm = z.admissibility(R)
    warnings = list(res.ledger.warnings)
    if not adm["admissible"]:
        warnings.append(f"sigma1 outside admissible window "
                        f"[{adm['lo']:.4g}, {adm['hi']:.4g}]")
    return {"artifacts": artifacts, "warnings": warnings,
            "admissibility": adm,
            "final_survival": float(res.ledger.survival[-1])}


# ---------------------------------------------------------------------------
# Bohmian ensemble
# ---------------------------------------------------------------------------

def scenario_bohm_ensemble(cfg, out_dir, deterministic=False, threads=1):
    packet = build_packet(cfg, 1)
    det = cfg.get("detector", {})
    R = float(det.get("R", 0) or _missing("detector.R"))
    tr = cfg.get("trajectories", {})
    n_traj = int(tr.get("n_traj", 1000))
    dt_traj = float(tr.get("dt", 0.1))
    seed = int(cfg.get("seed", 0))
    evo = _evolution_cfg(cfg)
    t_max = float(cfg.get("evolution", {}).get("t_max", 0) or
                  _missing("evolution.t_max"))
    lambdas = [float(v) for v in tr.get("lambdas", [det.get("lam", 0.1)])]
    grid = build_grid(cfg, 1)
    f = to_wave_field(packet, grid)
    wod = free_snapshot_store(f, t_max, stride_t=evo.dt * 10)
    artifacts, warnings = [], []
    med_delay, med_over, stalled = [], [], []

    def one_rung(idx_lam):
        idx, lam = idx_lam
        res = run_absorption(f, sphere_region(1, R), lam, evo, t_max,
                             snapshot_stride=10)
        wid = store_from_snapshots(res.snapshots, grid)
        return idx, ensemble_arrivals(f, R, wid, wod, lam, n_traj,
                                      seed=seed + idx, dt=dt_traj)

    results = [None] * len(lambdas)
    if threads > 1 and len(lambdas) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for idx, ens in pool.map(one_rung, enumerate(lambdas)):
                results[idx] = ens
    else:
        for pair in enumerate(lambdas):
            idx, ens = one_rung(pair)
            results[idx] = ens

    for lam, ens in zip(lambdas, results):
        path = _writer(out_dir, f"trajectories_lam{lam:g}.csv")
        ens.to_csv(path)
        artifacts.append(path)
        ok = ens.valid()
        d = (ens.T_WID - ens.T_WOD)[ok & np.isfinite(ens.T_WID)
                                    & np.isfinite(ens.T_WOD)]
        od = (ens.T_D - ens.T_WID)[ok & np.isfinite(ens.T_D)
                                   & np.isfinite(ens.T_WID)]
        med_delay.append(float(np.median(np.abs(d))) if d.size else np.nan)
        med_over.append(float(np.median(od)) if od.size else np.nan)
        stalled.append(ens.stalled_fraction)
        if ens.stalled_fraction > 0.05:
            warnings.append(f"stalled fraction {ens.stalled_fraction:.3f} "
                            f"at lam={lam}")

    out = {"artifacts": artifacts, "warnings": warnings,
           "median_delay": med_delay, "median_overshoot": med_over,
           "stalled_fraction": stalled}
    if len(lambdas) >= 3:
        s_d, _, e_d = loglog_slope(lambdas, med_delay)
        s_o, _, e_o = loglog_slope(lambdas, med_over)
        rows = [("lam", "median_abs_delay", "median_overshoot",
                 "stalled_fraction")]
        rows += [(fnum(l), fnum(a), fnum(b), fnum(c))
                 for l, a, b, c in zip(lambdas, med_delay, med_over, stalled)]
        rows.append(("slope_delay", fnum(s_d), "stderr", fnum(e_d)))
        rows.append(("slope_overshoot", fnum(s_o), "stderr", fnum(e_o)))
        path = _writer(out_dir, "delay_scaling.csv")
        _write_rows(path, rows)
        artifacts.append(path)
        out["delay_slope"] = s_d
        out["overshoot_slope"] = s_o
    return out


# ---------------------------------------------------------------------------
# Dirac suite
# ---------------------------------------------------------------------------

def scenario_dirac_suite(cfg, out_dir, deterministic=False, threads=1):
    seed = int(cfg.get("seed", 0))
    rng = seeded_stream(seed, 0)
    artifacts = []

    # algebra residuals over random real and complex wavevectors
    rows = [("kind", "value")]
    rows.append(("anticommutator_residual",
                 fnum(dr.SpinorAlgebra.anticommutator_residuals())))
    worst_proj, worst_alpha, worst_spec = 0.0, 0.0, 0.0
    for _ in range(100):
        k = rng.standard_normal(3) * 2.0
        Pp, Pm, omega = dr.projector(k)
        I4 = np.eye(4)
        worst_proj = max(
            worst_proj,
            float(np.max(np.abs(Pp @ Pp - Pp))),
            float(np.max(np.abs(Pp @ Pm))),
            float(np.max(np.abs(Pp + Pm - I4))))
        from .dirac.algebra import ALPHA
        for i in range(3):
            worst_alpha = max(worst_alpha, float(np.max(np.abs(
                Pp @ ALPHA[i] @ Pp - (k[i] / omega) * Pp))))
        kc = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        spec = dr.complex_k_spectrum(kc)
        worst_spec = max(worst_spec, spec["eigenvalue_residual"],
                         abs(spec["dims"][0] - 2), abs(spec["dims"][1] - 2))
    rows += [("projector_residual", fnum(worst_proj)),
             ("projected_velocity_residual", fnum(worst_alpha)),
             ("complex_spectrum_residual", fnum(worst_spec))]
    path = _writer(out_dir, "algebra_checks.csv")
    _write_rows(path, rows)
    artifacts.append(path)

    # helix fits over random spinor pairs, plus one sampled trajectory
    rows = [("pair", "period", "semi_major", "semi_minor", "drift_norm")]
    n_pairs = int(cfg.get("dirac", {}).get("helix_pairs", 20))
    sample_traj = None
    for i in range(n_pairs):
        up = np.zeros(4, complex)
        um = np.zeros(4, complex)
        up[:2] = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        um[2:] = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        h = dr.HelixParams(up, um)
        t = np.linspace(0.0, 10.0 * 2 * np.pi / h.omega0, 4096)
        xs = dr.helix_trajectory(h, t)
        fit = dr.helix_fit(t, xs)
        if sample_traj is None:
            sample_traj = (t, xs)
        rows.append((i, fnum(fit["period"]), fnum(fit["semi_major"]),
                     fnum(fit["semi_minor"]),
                     fnum(float(np.linalg.norm(fit["axis_drift"])))))
    path = _writer(out_dir, "helix_fits.csv")
    _write_rows(path, rows)
    artifacts.append(path)
    t, xs = sample_traj
    rows = [("t", "x", "y", "z")]
    rows += [(fnum(ti), fnum(p[0]), fnum(p[1]), fnum(p[2]))
             for ti, p in zip(t[::8], xs[::8])]
    path = _writer(out_dir, "helix_trajectory.csv")
    _write_rows(path, rows)
    artifacts.append(path)

    # reflection ladder
    rows = [("lam", "B_norm_ratio", "K3_re", "K3_im", "K3_exp_re", "K3_exp_im")]
    k = np.array([0.2, -0.1, 1.0])
    A_mu = (1.0, 0.0, 0.0, 0.3)
    lams = cfg.get("dirac", {}).get("lambdas",
                                    [1e-4, 3e-4, 1e-3, 3e-3, 1e-2])
    ratios = []
    for lam in lams:
        out = dr.dirac_step_reflection(k, lam, A_mu)
        ratios.append(out["B_norm_ratio"])
        rows.append((fnum(lam), fnum(out["B_norm_ratio"]),
                     fnum(out["K3"].real), fnum(out["K3"].imag),
                     fnum(out["K3_expansion"].real),
                     fnum(out["K3_expansion"].imag)))
    slope, _, _ = loglog_slope(lams, ratios)
    rows.append(("slope", fnum(slope), "", "", "", ""))
    path = _writer(out_dir, "reflection_ladder.csv")
    _write_rows(path, rows)
    artifacts.append(path)
    return {"artifacts": artifacts, "warnings": [],
            "reflection_slope": slope}


# ---------------------------------------------------------------------------
# Oracle tables
# ---------------------------------------------------------------------------

def _grid_values(spec_str):
    """Parse 'lo:hi:n' or 'lo:hi:n:log' into a numpy array."""
    parts = str(spec_str).split(":")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if len(parts) > 3 and parts[3] == "log":
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def scenario_oracle_table(cfg, out_dir, deterministic=False, threads=1):
    which = cfg.get("oracle", {}).get("which") or _missing("oracle.which")
    params = cfg.get("oracle", {})
    artifacts = []
    if which == "step-coefficients":
        ks = _grid_values(params.get("k", "0.5:2.0:16"))
        lams = _grid_values(params.get("lam", "1e-4:1e-2:10:log"))
        rows = [("k", "lam", "K_re", "K_im", "B_re", "B_im", "C_re", "C_im",
                 "abs_B_sq")]
        for k in ks:
            for lam in lams:
                s = step_coefficients(float(k), float(lam))
                rows.append((fnum(float(k)), fnum(float(lam)),
                             fnum(s.K.real), fnum(s.K.imag),
                             fnum(s.B.real), fnum(s.B.imag),
                             fnum(s.C.real), fnum(s.C.imag),
                             fnum(abs(s.B) ** 2)))
    elif which == "abr-reflection":
        ks = _grid_values(params.get("k", "0.1:4.0:40"))
        kappa = float(params.get("kappa", 1.0))
        rows = [("k", "kappa", "R")]
        for k in ks:
            rows.append((fnum(float(k)), fnum(kappa),
                         fnum(abr_reflection(float(k), kappa))))
    elif which == "time-delay":
        packet = build_packet(cfg, 3)
        lams = _grid_values(params.get("lam", "1e-3:1e-1:10:log"))
        R = float(params.get("R", 100.0))
        v0 = [float(v) for v in params.get("v0", [0.0, 0.0, 1.0])]
        rows = [("lam", "delay")]
        for lam in lams:
            rows.append((fnum(float(lam)),
                         fnum(time_delay_leading(packet, v0, R, float(lam)))))
    else:
        raise ConfigError("oracle.which", f"unknown table {which!r}")
    path = _writer(out_dir, f"oracle_{which}.csv")
    _write_rows(path, rows)
    artifacts.append(path)
    return {"artifacts": artifacts, "warnings": []}


# ---------------------------------------------------------------------------
# Classical no-signaling ensemble
# ---------------------------------------------------------------------------

def scenario_classical_nosignal(cfg, out_dir, deterministic=False, threads=1):
    det = cfg.get("detector", {})
    seed = int(cfg.get("seed", 0))
    n_samples = int(cfg.get("n_samples", 100000))
    state = cfg.get("initial_state", {})
    profile = dr.GaussianSpinorProfile(
        k0=tuple(state.get("k0", (0.0, 0.0, 0.5))),
        sigma_k=float(state.get("sigma_k", 0.15)),
        positive_energy=True)
    R0 = float(det.get("R", 40.0))
    t_cap = float(det.get("t_cap", 3.0 * R0))
    t_split = float(det.get("t_split", 0.5 * t_cap))
    slope = float(det.get("future_slope", 0.5))
    tube_a = dr.SpacetimeTube(((0.0, R0), (t_cap, R0 + 1e-9)))
    tube_b = dr.SpacetimeTube(((0.0, R0), (t_split, R0),
                               (t_cap, R0 + slope * (t_cap - t_split))))
    counts_a, meta, _ = dr.classical_ensemble_sigma(
        profile, tube_a, n_samples, seeded_stream(seed, 0))
    counts_b, _, _ = dr.classical_ensemble_sigma(
        profile, tube_b, n_samples, seeded_stream(seed, 1))
    pa = dr.classical.past_marginal(counts_a, meta, t_split)
    pb = dr.classical.past_marginal(counts_b, meta, t_split)
    tv, null_tv = dr.classical.no_signaling_gap(pa, pb, n_samples)
    rows = [("variant", "u_bin", "t_bin", "count")]
    for name, counts in (("const", counts_a), ("expanding", counts_b)):
        nz = np.argwhere(counts > 0)
        for ui, ti in nz:
            rows.append((name, int(ui), int(ti), fnum(counts[ui, ti])))
    path = _writer(out_dir, "nosignal_counts.csv")
    _write_rows(path, rows)
    summary = [("tv_past", fnum(tv)), ("null_tv", fnum(null_tv)),
               ("pass", str(tv < 3 * null_tv))]
    spath = _writer(out_dir, "nosignal_summary.csv")
    _write_rows(spath, summary)
    return {"artifacts": [path, spath], "warnings": [],
            "tv_past": tv, "null_tv": null_tv}
