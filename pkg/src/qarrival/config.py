"""Scenario configuration: schema validation with dotted-path error
reporting, canonical hashing, and construction of the domain objects."""

import hashlib
import json
import os

import numpy as np

from .errors import ConfigurationError
from .fields import Grid
from .gaussians import GaussianPacket, SuperposedPackets

SCENARIOS = {
    "absorber-1d": "1D absorbing detector run (optionally a limit ladder)",
    "absorber-3d": "3D absorbing detector (full grid or exact radial mode)",
    "absorber-ellipsoid": "3D absorber with an ellipsoidal surface",
    "zeno-1d": "1D repeated soft measurements with survival ledger",
    "zeno-3d": "3D repeated soft measurements",
    "bohm-ensemble": "Bohmian trajectory ensemble with detection clocks",
    "dirac-suite": "Dirac algebra, helix, step-reflection and asymptotics",
    "oracle-table": "closed-form oracle tables over parameter grids",
    "classical-nosignal": "classical straight-line ensemble, no-signaling",
}

MEMORY_CAP_ENV = "QARRIVAL_MEMORY_CAP_MB"


class ConfigError(ConfigurationError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"config key '{key}': {message}")


def _need(cfg, key, typ, path, default=None, required=True):
    if key not in cfg:
        if required and default is None:
            raise ConfigError(f"{path}{key}", "missing")
        return default
    val = cfg[key]
    if typ is float and isinstance(val, int):
        val = float(val)
    if not isinstance(val, typ):
        raise ConfigError(f"{path}{key}",
                          f"expected {getattr(typ, '__name__', typ)}, "
                          f"got {type(val).__name__}")
    return val


def _positive(val, key):
    if not val > 0:
        raise ConfigError(key, "must be strictly positive")
    return val


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("<root>", "top level must be an object")
    return cfg


def config_hash(cfg):
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def validate_scenario(cfg):
    kind = _need(cfg, "scenario", str, "")
    if kind not in SCENARIOS:
        raise ConfigError("scenario",
                          f"unknown scenario {kind!r}; see list-scenarios")
    _need(cfg, "seed", int, "", default=0, required=False)
    return kind


def build_packet(cfg, dim, path="initial_state."):
    state = cfg.get("initial_state")
    if state is None:
        raise ConfigError("initial_state", "missing")
    kind = _need(state, "kind", str, path, default="gaussian", required=False)
    if kind == "gaussian":
        sigma = state.get("sigma", 1.0)
        k0 = state.get("k0", 0.0)
        center = state.get("center", 0.0)
        try:
            return GaussianPacket(dim, sigma=sigma, k0=k0, center=center)
        except ConfigurationError as exc:
            raise ConfigError(path + "sigma", str(exc)) from exc
    if kind == "superposition":
        parts = _need(state, "parts", list, path)
        packets, coeffs = [], []
        for i, part in enumerate(parts):
            coeffs.append(complex(part.get("re", 1.0), part.get("im", 0.0)))
            packets.append(GaussianPacket(dim, sigma=part.get("sigma", 1.0),
                                          k0=part.get("k0", 0.0),
                                          center=part.get("center", 0.0)))
        return SuperposedPackets(coeffs, packets)
    raise ConfigError(path + "kind", f"unsupported initial state {kind!r}")


def build_grid(cfg, dim, path="grid."):
    grid = cfg.get("grid")
    if grid is None:
        raise ConfigError("grid", "missing")
    n = _need(grid, "n", int, path)
    length = _positive(_need(grid, "length", float, path), path + "length")
    check_memory_cap(dim, n)
    try:
        return Grid(dim, n, length)
    except ConfigurationError as exc:
        raise ConfigError(path + "n", str(exc)) from exc


def check_memory_cap(dim, n):
    cap_mb = float(os.environ.get(MEMORY_CAP_ENV, "4096"))
    # complex field + potential + FFT workspace + snapshots headroom
    est_mb = (n ** dim) * 16.0 * 8.0 / 1e6
    if est_mb > cap_mb:
        raise ConfigError(
            "grid.n", f"estimated {est_mb:.0f} MB exceeds the "
            f"{cap_mb:.0f} MB cap ({MEMORY_CAP_ENV})")


def histogram_edges(cfg, path="histogram."):
    hist = cfg.get("histogram", {})
    tau_max = _positive(_need(hist, "tau_max", float, path, default=4.0,
                              required=False), path + "tau_max")
    n_tau = _need(hist, "n_tau", int, path, default=80, required=False)
    tau_offset = _need(hist, "tau_offset", float, path, default=0.0,
                       required=False)
    rho_max = _positive(_need(hist, "rho_max", float, path, default=3.0,
                              required=False), path + "rho_max")
    n_rho = _need(hist, "n_rho", int, path, default=96, required=False)
    n_u = _need(hist, "n_u", int, path, default=64, required=False)
    tau_edges = tau_offset + np.linspace(0.0, tau_max, n_tau + 1)
    rho_edges = np.linspace(0.0, rho_max, n_rho + 1)
    return n_u, rho_edges, tau_edges
