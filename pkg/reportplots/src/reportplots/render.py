"""Stateless figure rendering for simulator artifacts.

One renderer per CSV schema.  No physics is computed here beyond
least-squares slope fits for log-log annotations; all numbers come from the
artifacts.  Output is deterministic: fixed hash salt, no embedded dates.
"""

import os

import matplotlib
matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "reportplots"
import matplotlib.pyplot as plt
import numpy as np

from .schemas import SchemaError, detect_schema, numeric_table

FORMATS = ("svg", "png")


def _save(fig, out_base, formats):
    paths = []
    for fmt in formats:
        path = f"{out_base}.{fmt}"
        fig.savefig(path, metadata={"Date": None} if fmt == "svg" else None,
                    dpi=120)
        paths.append(path)
    plt.close(fig)
    return paths


def _slope_fit(x, y):
    mask = (np.asarray(x) > 0) & (np.asarray(y) > 0)
    lx, ly = np.log(np.asarray(x)[mask]), np.log(np.asarray(y)[mask])
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    return coef[0], np.exp(coef[1])


# ---------------------------------------------------------------------------
# Renderers (one per schema kind)
# ---------------------------------------------------------------------------

def render_histogram(paths, out_base, formats=FORMATS, axes=None):
    """tau-marginal densities; several inputs overlay (run vs oracle)."""
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for path in paths:
        kind, header, data = detect_schema(path)
        if kind != "histogram":
            raise SchemaError(f"{path}: expected a histogram artifact")
        table, _ = numeric_table(data)
        arr = np.asarray(table)
        tau_lo, tau_hi, weight = arr[:, 6], arr[:, 7], arr[:, 8]
        edges = np.unique(np.concatenate([tau_lo, tau_hi]))
        centers = 0.5 * (edges[:-1] + edges[1:])
        marg = np.zeros(len(edges) - 1)
        idx = np.searchsorted(edges, tau_lo, side="left")
        np.add.at(marg, np.clip(idx, 0, len(marg) - 1), weight)
        widths = np.diff(edges)
        label = os.path.splitext(os.path.basename(path))[0]
        ax.step(centers, marg / np.maximum(widths, 1e-300), where="mid",
                label=label)
    ax.set_xlabel("scaled detection time tau")
    ax.set_ylabel("probability density")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_base, formats)


def render_ladder(paths, out_base, formats=FORMATS, axes=None):
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    for path in paths:
        kind, header, data = detect_schema(path)
        if kind != "ladder":
            raise SchemaError(f"{path}: expected a ladder artifact")
        table, _ = numeric_table(data)
        arr = np.asarray(table)
        lamR, tv = arr[:, 2], arr[:, 3]
        slope, _ = _slope_fit(lamR, tv)
        ax.loglog(lamR, tv, "o-", label=f"TV (slope {slope:.2f})")
    ax.set_xlabel("lambda R")
    ax.set_ylabel("total variation distance")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_base, formats)


def render_ledger(paths, out_base, formats=FORMATS, axes=None):
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    for path in paths:
        kind, header, data = detect_schema(path)
        if kind != "ledger":
            raise SchemaError(f"{path}: expected a ledger artifact")
        table, _ = numeric_table(data)
        arr = np.asarray(table)
        t, survival, oracle = arr[:, 1], arr[:, 3], arr[:, 4]
        ax.plot(t, survival, "o-", label="measured survival")
        if np.isfinite(oracle).any():
            ax.plot(t, oracle, "k--", label="mode-count oracle")
    ax.set_xlabel("time")
    ax.set_ylabel("no-detection probability")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_base, formats)


def render_trajectories(paths, out_base, formats=FORMATS, axes=None):
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    for path in paths:
        kind, header, data = detect_schema(path)
        if kind != "trajectories":
            raise SchemaError(f"{path}: expected a trajectories artifact")
        table, _ = numeric_table(data)
        arr = np.asarray(table)
        ok = arr[:, 7] == 0
        delays = arr[ok, 2] - arr[ok, 1]
        delays = delays[np.isfinite(delays)]
        if delays.size:
            ax.hist(delays, bins=60, histtype="step",
                    label=os.path.basename(path))
    ax.set_xlabel("T_WID - T_WOD")
    ax.set_ylabel("count")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, out_base, formats)


def render_delay_scaling(paths, out_base, formats=FORMATS, axes=None):
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    for path in paths:
        kind, header, data = detect_schema(path)
        if kind != "delay-scaling":
            raise SchemaError(f"{path}: expected a delay-scaling artifact")
        table, extras = numeric_table(data)
        arr = np.asarray(table)
        lam, delay, over = arr[:, 0], arr[:, 1], arr[:, 2]
        s1, _ = _slope_fit(lam, delay)
        s2, _ = _slope_fit(lam, over)
        ax.loglog(lam, delay, "o-", label=f"median |T_WID-T_WOD| (slope {s1:.2f})")
        ax.loglog(lam, over, "s-", label=f"median T_D-T_WID (slope {s2:.2f})")
    ax.set_xlabel("lambda")
    ax.set_ylabel("time")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_base, formats)


def render_field_snapshot(paths, out_base, formats=FORMATS, axes=None):
    """Soft-step style: +-|psi| dashed, Re psi solid."""
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for path in paths:
        kind, header, data = detect_schema(path)
        if kind != "field-snapshot":
            raise SchemaError(f"{path}: expected a field snapshot")
        table, _ = numeric_table(data)
        arr = np.asarray(table)
        x, re, im = arr[:, 0], arr[:, 1], arr[:, 2]
        mod = np.hypot(re, im)
        ax.plot(x, re, "k-", lw=0.8, label="Re psi")
        ax.plot(x, mod, "--", color="gray", lw=0.9, label="+|psi|")
        ax.plot(x, -mod, "--", color="gray", lw=0.9, label="-|psi|")
    ax.set_xlabel("x")
    handles, labels = ax.get_legend_handles_labels()
    ax.legend(handles[:3], labels[:3])
    fig.tight_layout()
    return _save(fig, out_base, formats)


def render_helix3d(paths, out_base, formats=FORMATS, axes=None):
    fig = plt.figure(figsize=(6, 5))
    ax = fig.add_subplot(projection="3d")
    for path in paths:
        kind, header, data = detect_schema(path)
        if kind != "helix-trajectory":
            raise SchemaError(f"{path}: expected a helix trajectory")
        table, _ = numeric_table(data)
        arr = np.asarray(table)
        ax.plot(arr[:, 1], arr[:, 2], arr[:, 0], lw=0.8)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_zlabel("t")
    fig.tight_layout()
    return _save(fig, out_base, formats)


def render_helix_fits(paths, out_base, formats=FORMATS, axes=None):
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    for path in paths:
        kind, header, data = detect_schema(path)
        if kind != "helix-fits":
            raise SchemaError(f"{path}: expected helix fits")
        table, _ = numeric_table(data)
        arr = np.asarray(table)
        ax.plot(arr[:, 0], arr[:, 2], "o", label="semi-major")
        ax.plot(arr[:, 0], arr[:, 3], "s", label="semi-minor")
    ax.set_xlabel("spinor pair")
    ax.set_ylabel("ellipse semi-axes")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_base, formats)


def render_reflection_ladder(paths, out_base, formats=FORMATS, axes=None):
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    for path in paths:
        kind, header, data = detect_schema(path)
        if kind != "reflection-ladder":
            raise SchemaError(f"{path}: expected a reflection ladder")
        table, extras = numeric_table(data)
        arr = np.asarray(table)
        lam, ratio = arr[:, 0], arr[:, 1]
        slope, _ = _slope_fit(lam, ratio)
        ax.loglog(lam, ratio, "o-", label=f"||B||/||A|| (slope {slope:.2f})")
    ax.set_xlabel("lambda")
    ax.set_ylabel("reflected amplitude ratio")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_base, formats)


def render_algebra_checks(paths, out_base, formats=FORMATS, axes=None):
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    for path in paths:
        kind, header, data = detect_schema(path)
        if kind != "algebra-checks":
            raise SchemaError(f"{path}: expected algebra checks")
        names = [row[0] for row in data]
        vals = [max(float(row[1]), 1e-18) for row in data]
        ax.barh(names, vals, log=True)
    ax.set_xlabel("residual")
    fig.tight_layout()
    return _save(fig, out_base, formats)


def render_nosignal(paths, out_base, formats=FORMATS, axes=None):
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for path in paths:
        kind, header, data = detect_schema(path)
        if kind != "nosignal-counts":
            raise SchemaError(f"{path}: expected no-signaling counts")
        variants = {}
        for row in data:
            variants.setdefault(row[0], []).append(
                (int(row[1]), int(row[2]), float(row[3])))
        for name, rows in sorted(variants.items()):
            t_bins = {}
            for _, ti, cnt in rows:
                t_bins[ti] = t_bins.get(ti, 0.0) + cnt
            ts = sorted(t_bins)
            ax.step(ts, [t_bins[t] for t in ts], where="mid", label=name)
    ax.set_xlabel("wall-time bin")
    ax.set_ylabel("detections")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_base, formats)


def render_oracle_table(paths, out_base, formats=FORMATS, axes=None):
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    for path in paths:
        kind, header, data = detect_schema(path)
        table, _ = numeric_table(data)
        arr = np.asarray(table)
        if kind == "oracle-step-coefficients":
            for k in np.unique(arr[:, 0]):
                sel = arr[:, 0] == k
                ax.loglog(arr[sel, 1], arr[sel, 8], "o-", label=f"k={k:g}")
            ax.set_xlabel("lambda")
            ax.set_ylabel("|B|^2")
        elif kind == "oracle-abr":
            ax.plot(arr[:, 0], arr[:, 2], "-")
            ax.set_xlabel("k")
            ax.set_ylabel("reflection coefficient")
        elif kind == "oracle-time-delay":
            ax.loglog(arr[:, 0], np.abs(arr[:, 1]), "o-")
            ax.set_xlabel("lambda")
            ax.set_ylabel("|arrival delay|")
        else:
            raise SchemaError(f"{path}: not an oracle table")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, out_base, formats)


RENDERERS = {
    "histogram": render_histogram,
    "ladder": render_ladder,
    "ledger": render_ledger,
    "trajectories": render_trajectories,
    "delay-scaling": render_delay_scaling,
    "field-snapshot": render_field_snapshot,
    "helix-trajectory": render_helix3d,
    "helix-fits": render_helix_fits,
    "reflection-ladder": render_reflection_ladder,
    "algebra-checks": render_algebra_checks,
    "nosignal-counts": render_nosignal,
    "oracle-step-coefficients": render_oracle_table,
    "oracle-abr": render_oracle_table,
    "oracle-time-delay": render_oracle_table,
}

# schemas that are data tables without a figure of their own
TABLE_ONLY = {"nosignal-summary"}


def render_spec(spec):
    """Render one FigureSpec dict: {inputs, kind?, output, formats?}.

    The kind is inferred from the first input when omitted.  Inputs must
    exist and match the schema; anything else fails loudly.
    """
    inputs = spec["inputs"]
    for path in inputs:
        if not os.path.exists(path):
            raise SchemaError(f"input does not exist: {path}")
    kind = spec.get("kind")
    if kind is None:
        kind, _, _ = detect_schema(inputs[0])
    if kind in TABLE_ONLY:
        return []
    if kind not in RENDERERS:
        raise SchemaError(f"no renderer for artifact kind {kind!r}")
    formats = tuple(spec.get("formats", FORMATS))
    return RENDERERS[kind](inputs, spec["output"], formats=formats,
                           axes=spec.get("axes"))


def render_artifact_dir(directory, out_dir):
    """Render every recognized CSV artifact in a directory; unknown
    schemas raise.  Returns the list of written figure files."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name in sorted(os.listdir(directory)):
        if not name.endswith(".csv"):
            continue
        path = os.path.join(directory, name)
        kind, _, _ = detect_schema(path)
        if kind in TABLE_ONLY:
            continue
        base = os.path.join(out_dir, os.path.splitext(name)[0])
        written += render_spec({"inputs": [path], "kind": kind,
                                "output": base})
    return written
