"""Detection histograms over (direction u, scaled radius rho, scaled time tau)
and the equal-area sphere binning they share.

tau is detection time rescaled by R / v_ref with v_ref a reference speed
(the spectral centroid hbar kbar / m of the initial state), so the bulk of
any scenario's detections lands at tau = O(1).  rho = |x| / R.
"""

import csv
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ConfigurationError
from .textio import fnum


# ---------------------------------------------------------------------------
# Equal-area sphere partition: latitude bands subdivided in azimuth
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SphereBins:
    """Exactly equal-area cells: bands in z = cos(theta), sectors in phi.

    Band b spans z in [z_edges[b+1], z_edges[b]] (descending from +1) and is
    split into counts[b] azimuthal sectors; every cell has area 4 pi / total.
    """

    z_edges: tuple
    counts: tuple

    @property
    def n_bins(self):
        return int(sum(self.counts))

    @staticmethod
    def make(n_bins=64):
        if n_bins < 1:
            raise ConfigurationError("need at least one direction bin")
        n_bands = max(1, int(round(np.sqrt(n_bins))))
        if n_bands > 1 and n_bands % 2 == 0:
            # an odd band count keeps z = 0 in the middle of a band, so the
            # equatorial plane of a symmetric grid is not split by an edge
            n_bands += -1 if n_bands > 2 else 1
        base, extra = divmod(n_bins, n_bands)
        counts = [base] * n_bands
        mid = n_bands // 2
        order = sorted(range(n_bands), key=lambda b: (abs(b - mid), b))
        for i in range(extra):
            counts[order[i]] += 1
        counts = tuple(counts)
        edges = [1.0]
        acc = 0
        for c in counts:
            acc += c
            edges.append(1.0 - 2.0 * acc / n_bins)
        edges[-1] = -1.0
        return SphereBins(tuple(edges), counts)

    def index_of(self, u):
        """Bin ids for unit vectors u of shape (..., 3)."""
        u = np.asarray(u, dtype=float)
        z = np.clip(u[..., 2], -1.0, 1.0)
        phi = np.mod(np.arctan2(u[..., 1], u[..., 0]), 2.0 * np.pi)
        edges = np.asarray(self.z_edges)
        # z descends through the edges; band index via searchsorted on -z
        band = np.clip(np.searchsorted(-edges, -z, side="left") - 1,
                       0, len(self.counts) - 1)
        counts = np.asarray(self.counts)
        offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
        sector = np.minimum((phi / (2.0 * np.pi) * counts[band]).astype(int),
                            counts[band] - 1)
        return offsets[band] + sector

    def centers(self):
        out = np.empty((self.n_bins, 3))
        i = 0
        for b, c in enumerate(self.counts):
            z0, z1 = self.z_edges[b], self.z_edges[b + 1]
            zc = 0.5 * (z0 + z1)
            s = np.sqrt(max(0.0, 1.0 - zc ** 2))
            for j in range(c):
                phic = 2.0 * np.pi * (j + 0.5) / c
                out[i] = (s * np.cos(phic), s * np.sin(phic), zc)
                i += 1
        return out


def sign_bin_centers():
    """1D 'directions': the two signs, embedded as 3-vectors."""
    return np.array([[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])


# ---------------------------------------------------------------------------
# Detection histogram
# ---------------------------------------------------------------------------

@dataclass
class HistogramSpec:
    dim: int
    n_u: int = 64                       # ignored in 1D (always 2 sign bins)
    rho_edges: np.ndarray = None
    tau_edges: np.ndarray = None

    def __post_init__(self):
        if self.rho_edges is None:
            self.rho_edges = np.linspace(0.0, 3.0, 97)
        if self.tau_edges is None:
            self.tau_edges = np.linspace(0.0, 4.0, 81)
        self.rho_edges = np.asarray(self.rho_edges, float)
        self.tau_edges = np.asarray(self.tau_edges, float)


class DetectionHistogram:
    """Weighted histogram of detection events over (u, rho, tau).

    Weights are probability mass.  Exact first and second moments of rho and
    tau are accumulated before binning, so spread statistics do not suffer
    binning bias.  Mass falling outside the rho/tau ranges is recorded in
    `overflow` (kept out of the bins but part of `total`).
    """

    def __init__(self, spec: HistogramSpec, R: float, v_ref: float, meta=None):
        self.spec = spec
        self.R = float(R)
        self.v_ref = float(v_ref)
        if spec.dim == 1:
            self.u_centers = sign_bin_centers()
            self.sphere_bins = None
        else:
            self.sphere_bins = SphereBins.make(spec.n_u)
            self.u_centers = self.sphere_bins.centers()
        n_u = len(self.u_centers)
        self.weights = np.zeros((n_u, len(spec.rho_edges) - 1,
                                 len(spec.tau_edges) - 1))
        self.overflow = 0.0
        self.moments = np.zeros(5)  # sum w, w*rho, w*rho^2, w*tau, w*tau^2
        self.warnings = []
        self.meta = dict(meta or {})

    # -- accumulation --------------------------------------------------------

    def tau_of_time(self, t):
        return np.asarray(t) * self.v_ref / self.R

    def add(self, u_idx, rho, tau, w):
        """Vectorized accumulation of event masses."""
        u_idx = np.asarray(u_idx, dtype=int)
        rho = np.asarray(rho, float)
        tau = np.asarray(tau, float)
        w = np.asarray(w, float)
        self.moments += np.array([w.sum(), (w * rho).sum(), (w * rho ** 2).sum(),
                                  (w * tau).sum(), (w * tau ** 2).sum()])
        re, te = self.spec.rho_edges, self.spec.tau_edges
        ri = np.searchsorted(re, rho, side="right") - 1
        ti = np.searchsorted(te, tau, side="right") - 1
        ok = (ri >= 0) & (ri < len(re) - 1) & (ti >= 0) & (ti < len(te) - 1)
        self.overflow += float(w[~ok].sum())
        np.add.at(self.weights, (u_idx[ok], ri[ok], ti[ok]), w[ok])

    # -- summaries -----------------------------------------------------------

    @property
    def total(self):
        return float(self.weights.sum()) + self.overflow

    def tau_marginal(self):
        return self.weights.sum(axis=(0, 1))

    def rho_marginal(self):
        return self.weights.sum(axis=(0, 2))

    def u_marginal(self):
        return self.weights.sum(axis=(1, 2))

    def u_tau_marginal(self):
        return self.weights.sum(axis=1)

    def rho_mean_std(self):
        w, wr, wr2 = self.moments[0], self.moments[1], self.moments[2]
        if w <= 0:
            raise ConfigurationError("empty histogram")
        mean = wr / w
        var = max(wr2 / w - mean ** 2, 0.0)
        return mean, np.sqrt(var)

    def tau_mean_std(self):
        w, wt, wt2 = self.moments[0], self.moments[3], self.moments[4]
        if w <= 0:
            raise ConfigurationError("empty histogram")
        mean = wt / w
        var = max(wt2 / w - mean ** 2, 0.0)
        return mean, np.sqrt(var)

    # -- IO -------------------------------------------------------------------

    CSV_FIELDS = ["u_bin_id", "u_center_x", "u_center_y", "u_center_z",
                  "rho_lo", "rho_hi", "tau_lo", "tau_hi", "weight"]

    def to_csv(self, path, include_empty=False):
        re_, te = self.spec.rho_edges, self.spec.tau_edges
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.CSV_FIELDS)
            nz = np.argwhere(self.weights > 0) if not include_empty else \
                np.argwhere(np.ones_like(self.weights, dtype=bool))
            for ui, ri, ti in nz:
                c = self.u_centers[ui]
                writer.writerow([int(ui), fnum(c[0]), fnum(c[1]), fnum(c[2]),
                                 fnum(re_[ri]), fnum(re_[ri + 1]),
                                 fnum(te[ti]), fnum(te[ti + 1]),
                                 fnum(self.weights[ui, ri, ti])])

    @staticmethod
    def read_csv_weights(path):
        """Load (rows, header) from a histogram CSV for comparisons."""
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != DetectionHistogram.CSV_FIELDS:
                raise ConfigurationError(
                    f"unexpected histogram columns {reader.fieldnames}")
            rows = [{k: (int(v) if k == "u_bin_id" else float(v))
                     for k, v in row.items()} for row in reader]
        return rows
