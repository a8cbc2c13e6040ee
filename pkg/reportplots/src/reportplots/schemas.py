"""CSV schema registry for the simulator's artifacts.

Every schema the primary component emits is declared here by its exact
header; an unknown or mismatched header is a hard error, never a guess.
"""

import csv

KNOWN_SCHEMAS = {
    "histogram": ["u_bin_id", "u_center_x", "u_center_y", "u_center_z",
                  "rho_lo", "rho_hi", "tau_lo", "tau_hi", "weight"],
    "ladder": ["R", "lam", "lamR", "tv_distance", "mean_overshoot",
               "runtime_seconds"],
    "ledger": ["n", "t", "p_detect", "survival", "oracle_survival", "w_n",
               "bound_ratio"],
    "trajectories": ["id", "T_WOD", "T_WID", "T_D", "X_WOD", "X_WID", "X_D",
                     "stalled"],
    "delay-scaling": ["lam", "median_abs_delay", "median_overshoot",
                      "stalled_fraction"],
    "field-snapshot": ["x", "re", "im"],
    "helix-trajectory": ["t", "x", "y", "z"],
    "helix-fits": ["pair", "period", "semi_major", "semi_minor",
                   "drift_norm"],
    "reflection-ladder": ["lam", "B_norm_ratio", "K3_re", "K3_im",
                          "K3_exp_re", "K3_exp_im"],
    "algebra-checks": ["kind", "value"],
    "nosignal-counts": ["variant", "u_bin", "t_bin", "count"],
    "nosignal-summary": None,   # key/value rows, no header
    "oracle-step-coefficients": ["k", "lam", "K_re", "K_im", "B_re", "B_im",
                                 "C_re", "C_im", "abs_B_sq"],
    "oracle-abr": ["k", "kappa", "R"],
    "oracle-time-delay": ["lam", "delay"],
}


class SchemaError(ValueError):
    pass


def read_rows(path):
    """Rows of a CSV artifact, skipping comment lines."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh)
                if row and not row[0].startswith("#")]
    if not rows:
        raise SchemaError(f"{path}: empty artifact")
    return rows


def detect_schema(path):
    """Identify the artifact kind from its header; unknown headers fail."""
    rows = read_rows(path)
    header = rows[0]
    for kind, cols in KNOWN_SCHEMAS.items():
        if cols is not None and header == cols:
            return kind, header, rows[1:]
    # trailing summary rows (slope annotations etc.) are permitted only for
    # schemas that declare them; key/value summaries have 2..3 columns of
    # (name, value) pairs with a non-numeric first header cell
    if header and header[0] in ("tv_past", "slope", "slope_delay"):
        return "nosignal-summary", None, rows
    if all(len(r) == 2 for r in rows) and header[0] == "tv_past":
        return "nosignal-summary", None, rows
    raise SchemaError(
        f"{path}: unknown artifact schema with columns {header}")


def numeric_table(data_rows, drop_trailing_labels=True):
    """Parse rows into floats, splitting off non-numeric trailing rows
    (slope annotations appended after the data block)."""
    table, extras = [], []
    for row in data_rows:
        try:
            table.append([float(v) for v in row])
        except ValueError:
            extras.append(row)
    return table, extras
