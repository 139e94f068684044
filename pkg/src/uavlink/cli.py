"""Command-line front end: ``curve``, ``outage``, ``validate``, ``optimal-n``.

Scenarios come from an INI file. Angles are given in milliradians there and
converted to radians on load. Every CSV starts with ``#`` comment lines
carrying the config hash and library version; no timestamps are written, so
re-running a manifest reproduces byte-identical files.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import (
    G2u2gLink,
    U2u2uLink,
    U2uLink,
    default_grid,
    distribution_curve,
    link_cdf,
    outage_probability,
    zero_atom,
)
from .antenna import OrientationModel, UlaPattern
from .linkbudget import LinkBudget, capacity_to_threshold, db_to_linear, reference_snr
from .montecarlo import DEFAULT_TRIALS, SimConfig, simulate_link
from .optimizer import SweepSpec, optimum_table

NODE_SECTIONS = {"u2u": ("tx", "rx"), "u2u2u": ("s", "R", "d"), "g2u2g": ("R",)}
EVALUATOR_CHOICES = ("analytic", "mc", "both")


class ConfigError(ValueError):
    """Invalid scenario file; the message names the offending section or key."""


# ---------------------------------------------------------------------------
# config loading
# ---------------------------------------------------------------------------

@dataclass
class ScenarioConfig:
    kind: str
    link: object
    gamma_th: float
    seed: int
    trials: int
    gain_model: str
    workers: int
    chunk_size: int
    grid_points: int
    sweep: dict = field(default_factory=dict)
    validate: dict = field(default_factory=dict)
    digest: str = ""
    source: dict = field(default_factory=dict)


def _get(cp, section, key, conv=float, default=None):
    if not cp.has_option(section, key):
        if default is None:
            raise ConfigError(f"missing key '{key}' in section [{section}]")
        return default
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for [{section}] {key} = {raw!r}: {exc}") from None


def _floats(raw: str) -> list[float]:
    try:
        return [float(t) for t in raw.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"[sweep] expected a list of numbers, got {raw!r}") from None


def _ints(raw: str) -> list[int]:
    """Integers and inclusive ``lo:hi`` ranges, e.g. ``2:32`` or ``4 6 8``."""
    out = []
    try:
        for tok in raw.replace(",", " ").split():
            if ":" in tok:
                lo, hi = tok.split(":")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(tok))
    except ValueError:
        raise ConfigError(f"[sweep] expected integers or lo:hi ranges, got {raw!r}") from None
    if not out:
        raise ConfigError("[sweep] empty integer list")
    return out


def _budget(cp, distance_key="distance_z") -> LinkBudget:
    s = "link"
    mode = _get(cp, s, "snr_mode", str, "normalized")
    kw = dict(
        distance_z=_get(cp, s, distance_key, float, _get(cp, s, "distance_z", float, 500.0)),
        carrier_ghz=_get(cp, s, "carrier_ghz", float, 60.0),
        building_height=_get(cp, s, "building_height", float, 25.0),
        noise_dbm=_get(cp, s, "noise_dbm", float, 30.0),
        nakagami_m=_get(cp, s, "nakagami_m", float, 3.0),
        snr_mode=mode,
    )
    if mode == "physical":
        kw["tx_power_dbm"] = _get(cp, s, "tx_power_dbm")
    else:
        kw["ref_snr_db"] = _get(cp, s, "snr_db", float, 0.0)
    try:
        return LinkBudget(**kw)
    except ValueError as exc:
        raise ConfigError(f"[link] {exc}") from None


def _orientation(cp, section) -> OrientationModel:
    try:
        return OrientationModel.from_mrad(_get(cp, section, "theta_prime_mrad", float, 0.0),
                                          _get(cp, section, "sigma_mrad", float, 0.0))
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def canonical_digest(cp: configparser.ConfigParser, overrides: dict) -> str:
    payload = {sec: dict(sorted((k, v.strip()) for k, v in cp.items(sec)))
               for sec in sorted(cp.sections())}
    payload["__overrides__"] = {k: v for k, v in sorted(overrides.items()) if v is not None}
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def load_config(path, *, seed=None, trials=None) -> ScenarioConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keep key case; section names such as R stay as written
    text = Path(path).read_text()
    cp.read_string(text)
    for sec in ("link", "antenna"):
        if not cp.has_section(sec):
            raise ConfigError(f"missing section [{sec}]")
    kind = _get(cp, "link", "kind", str)
    if kind not in NODE_SECTIONS:
        raise ConfigError(f"[link] kind must be one of {sorted(NODE_SECTIONS)}, got {kind!r}")
    for sec in NODE_SECTIONS[kind]:
        if not cp.has_section(sec):
            raise ConfigError(f"missing section [{sec}] required for kind {kind}")

    try:
        pattern = UlaPattern(_get(cp, "antenna", "n_elements", int),
                             _get(cp, "antenna", "n_sectors", int, 20),
                             _get(cp, "antenna", "lobe_exponent", float, 2.5))
    except ValueError as exc:
        raise ConfigError(f"[antenna] {exc}") from None

    nodes = {sec: _orientation(cp, sec) for sec in NODE_SECTIONS[kind]}
    if kind == "u2u":
        link = U2uLink(pattern, nodes["tx"], nodes["rx"], _budget(cp))
    elif kind == "u2u2u":
        link = U2u2uLink(pattern, nodes["s"], nodes["R"], nodes["d"],
                         _budget(cp, "distance_sr"), _budget(cp, "distance_dr"))
    else:
        link = G2u2gLink(pattern, nodes["R"], _budget(cp))

    run = "run"
    if not cp.has_section(run):
        cp.add_section(run)
    gamma_th = _threshold(cp)
    cfg_seed = _get(cp, run, "seed", int, 0)
    cfg_trials = _get(cp, run, "trials", int, DEFAULT_TRIALS)
    sc = ScenarioConfig(
        kind=kind,
        link=link,
        gamma_th=gamma_th,
        seed=cfg_seed if seed is None else seed,
        trials=cfg_trials if trials is None else trials,
        gain_model=_get(cp, run, "gain_model", str, "exact"),
        workers=_get(cp, run, "workers", int, 1),
        chunk_size=_get(cp, run, "chunk_size", int, 1 << 20),
        grid_points=_get(cp, run, "grid_points", int, 400),
        sweep=dict(cp.items("sweep")) if cp.has_section("sweep") else {},
        validate=dict(cp.items("validate")) if cp.has_section("validate") else {},
        digest=canonical_digest(cp, {"seed": seed, "trials": trials}),
        source={sec: dict(cp.items(sec)) for sec in cp.sections()},
    )
    if sc.trials < 1:
        raise ConfigError("[run] trials must be positive")
    return sc


def _threshold(cp) -> float:
    keys = [k for k in ("gamma_th", "gamma_th_db", "c_th") if cp.has_option("run", k)]
    if len(keys) > 1:
        raise ConfigError(f"[run] give only one of gamma_th, gamma_th_db, c_th (got {keys})")
    if not keys:
        return db_to_linear(10.0)
    key = keys[0]
    val = _get(cp, "run", key)
    if key == "gamma_th":
        return val
    if key == "gamma_th_db":
        return db_to_linear(val)
    return capacity_to_threshold(val)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: Path, header: list[str], rows, comments: dict) -> None:
    buf = io.StringIO()
    for key, val in comments.items():
        buf.write(f"# {key}={val}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue())


def _comments(sc: ScenarioConfig, **extra) -> dict:
    out = {"config_hash": sc.digest, "library_version": __version__}
    out.update(extra)
    return out


def _write_manifest(out_dir: Path, sc: ScenarioConfig, command: str, evaluator: str,
                    files: list[str]) -> None:
    manifest = {
        "command": command,
        "config_hash": sc.digest,
        "library_version": __version__,
        "seed": sc.seed,
        "trials": sc.trials,
        "evaluator": evaluator,
        "gain_model": sc.gain_model,
        "config": sc.source,
        "files": sorted(files),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _db(x):
    return 10.0 * math.log10(x) if x > 0 else float("-inf")


def _gamma_bar(sc: ScenarioConfig) -> float:
    link = sc.link
    return reference_snr(link.budget_sr if isinstance(link, U2u2uLink) else link.budget)


def _sim_config(sc: ScenarioConfig, **kw) -> SimConfig:
    return SimConfig(link_kind=sc.kind, trials=sc.trials, gain_model=sc.gain_model,
                     seed=sc.seed, workers=sc.workers, chunk_size=sc.chunk_size, **kw)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_curve(sc: ScenarioConfig, evaluator: str, out_dir: Path) -> int:
    grid = default_grid(_gamma_bar(sc), sc.link.pattern.n_elements, sc.grid_points)
    files = []
    if evaluator in ("analytic", "both"):
        curve = distribution_curve(sc.link, grid)
        com = _comments(sc, zero_atom=repr(curve.zero_atom), evaluator="analytic")
        for name, vals in (("curve_pdf.csv", curve.pdf), ("curve_cdf.csv", curve.cdf)):
            write_csv(out_dir / name, ["gamma_linear", "gamma_db", "value"],
                      ((g, _db(g), v) for g, v in zip(grid, vals)), com)
            files.append(name)
    if evaluator in ("mc", "both"):
        res = simulate_link(_sim_config(sc, cdf_points=tuple(grid)), sc.link)
        suffix = "" if evaluator == "mc" else "_mc"
        com = _comments(sc, zero_atom=repr(res.zero_fraction), evaluator="mc",
                        seed=sc.seed, trials=sc.trials)
        pdf_name, cdf_name = f"curve_pdf{suffix}.csv", f"curve_cdf{suffix}.csv"
        write_csv(out_dir / pdf_name, ["gamma_linear", "gamma_db", "value"],
                  ((g, _db(g), v) for g, v in zip(res.bin_centers, res.density)), com)
        write_csv(out_dir / cdf_name, ["gamma_linear", "gamma_db", "value"],
                  ((g, _db(g), v) for g, v in zip(grid, res.cdf)), com)
        files += [pdf_name, cdf_name]
    _write_manifest(out_dir, sc, "curve", evaluator, files)
    return 0


def _rebuild(sc: ScenarioConfig, snr_db=None, n=None):
    """Copy of the scenario link with a new reference SNR and/or array size."""
    link = sc.link
    pat = link.pattern if n is None else UlaPattern(int(n), link.pattern.n_sectors,
                                                    link.pattern.lobe_exponent)

    def bud(b):
        return b if snr_db is None else b.with_snr_db(snr_db)

    if isinstance(link, U2uLink):
        return U2uLink(pat, link.orient_tx, link.orient_rx, bud(link.budget))
    if isinstance(link, U2u2uLink):
        return U2u2uLink(pat, link.orient_s, link.orient_r, link.orient_d,
                         bud(link.budget_sr), bud(link.budget_dr))
    return G2u2gLink(pat, link.orient_r, bud(link.budget))


def cmd_outage(sc: ScenarioConfig, evaluator: str, out_dir: Path) -> int:
    var = sc.sweep.get("var", "snr_db")
    if var == "snr_db":
        raw = sc.sweep.get("snr_db", "0:40:1")
        values = _range(raw) if ":" in raw else _floats(raw)
        links = [_rebuild(sc, snr_db=v) for v in values]
    elif var == "n_elements":
        values = _ints(sc.sweep.get("n_elements", "2:32"))
        links = [_rebuild(sc, n=v) for v in values]
    else:
        raise ConfigError("[sweep] var must be snr_db or n_elements")
    method = sc.sweep.get("relay_method", "exact")
    rows = []
    for v, link in zip(values, links):
        pa = pm = se = None
        if evaluator in ("analytic", "both"):
            pa = outage_probability(link, sc.gamma_th, relay_method=method)
        if evaluator in ("mc", "both"):
            res = simulate_link(_sim_config(sc, thresholds=(sc.gamma_th,)), link)
            pm, se = float(res.outage[0]), float(res.outage_stderr[0])
        rows.append((v, pa, pm, se))
    write_csv(out_dir / "outage.csv", ["sweep_var", "p_out_analytic", "p_out_mc", "mc_stderr"],
              rows, _comments(sc, sweep_var=var, gamma_th=repr(sc.gamma_th), evaluator=evaluator))
    _write_manifest(out_dir, sc, "outage", evaluator, ["outage.csv"])
    return 0


def _range(spec: str) -> list[float]:
    """'lo:hi:step' inclusive float range."""
    try:
        parts = [float(p) for p in spec.split(":")]
    except ValueError:
        parts = []
    if len(parts) != 3 or parts[2] <= 0:
        raise ConfigError(f"range must be lo:hi:step, got {spec!r}")
    lo, hi, step = parts
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + k * step for k in range(count)]


def cmd_validate(sc: ScenarioConfig, out_dir: Path, stream=None) -> int:
    stream = stream or sys.stdout
    sup_tol = float(sc.validate.get("sup_tol", 1e-2))
    se_tol = float(sc.validate.get("se_tol", 3.0))
    min_p = float(sc.validate.get("min_outage", 1e-4))
    gbar = _gamma_bar(sc)
    grid = default_grid(gbar, sc.link.pattern.n_elements, sc.grid_points)
    analytic = np.asarray(link_cdf(sc.link, grid), dtype=float)
    pa = outage_probability(sc.link, sc.gamma_th)
    res = simulate_link(_sim_config(sc, cdf_points=tuple(grid), thresholds=(sc.gamma_th,)),
                        sc.link)
    diff = np.abs(res.cdf - analytic)
    sup = float(diff.max())
    at = float(grid[int(diff.argmax())])
    low = grid < gbar
    sup_low = float(diff[low].max()) if np.any(low) else 0.0
    pm, se = float(res.outage[0]), float(res.outage_stderr[0])
    z = abs(pm - pa) / se if se > 0 else (0.0 if pm == pa else math.inf)
    outage_checked = pa >= min_p
    ok_sup = sup <= sup_tol
    ok_out = (z <= se_tol) or not outage_checked
    lines = [
        f"cdf_sup_diff={sup:.4g} at gamma={at:.4g} (tol {sup_tol:g}) {'PASS' if ok_sup else 'FAIL'}",
        f"cdf_sup_diff_below_gamma_bar={sup_low:.4g}"
        + (" LOW-SNR REGION DEGRADED" if sup_low > sup_tol else ""),
        f"outage analytic={pa:.4g} mc={pm:.4g} se={se:.3g} diff={z:.2f} SE (tol {se_tol:g})"
        + ("" if outage_checked else f" not checked below {min_p:g}")
        + f" {'PASS' if ok_out else 'FAIL'}",
        f"zero_atom analytic={zero_atom(sc.link):.4g} mc={res.zero_fraction:.4g}",
    ]
    status = "PASS" if ok_sup and ok_out else "FAIL"
    lines.append(f"overall {status}")
    for line in lines:
        print(line, file=stream)
    write_csv(out_dir / "validate.csv", ["metric", "value", "tolerance", "status"],
              [("cdf_sup_diff", sup, sup_tol, "PASS" if ok_sup else "FAIL"),
               ("cdf_sup_diff_low", sup_low, sup_tol, "PASS" if sup_low <= sup_tol else "FLAG"),
               ("outage_diff_se", z, se_tol, "PASS" if ok_out else "FAIL")],
              _comments(sc, gamma_th=repr(sc.gamma_th), seed=sc.seed, trials=sc.trials))
    _write_manifest(out_dir, sc, "validate", "both", ["validate.csv"])
    return 0 if status == "PASS" else 1


def cmd_optimal_n(sc: ScenarioConfig, evaluator: str, out_dir: Path) -> int:
    link = sc.link
    first = NODE_SECTIONS[sc.kind][0]
    base = link_orient(link)
    sigmas = _floats(sc.sweep.get("sigma_mrad", repr(base.sigma * 1e3)))
    offsets = _floats(sc.sweep.get("theta_prime_mrad", repr(base.boresight * 1e3)))
    snrs = _floats(sc.sweep.get("snr_db", repr(_db(_gamma_bar(sc)))))
    ns = _ints(sc.sweep.get("n_elements", "2:32"))
    spec = SweepSpec(
        n_range=(min(ns), max(ns)),
        snr_points=tuple(snrs),
        sigma_points=tuple(s * 1e-3 for s in sigmas),
        offset_points=tuple(o * 1e-3 for o in offsets),
        link_kind=sc.kind,
        evaluator={"mc": "montecarlo"}.get(evaluator, evaluator),
        gamma_th=sc.gamma_th,
        n_sectors=link.pattern.n_sectors,
        lobe_exponent=link.pattern.lobe_exponent,
        nakagami_m=(link.budget_sr if sc.kind == "u2u2u" else link.budget).nakagami_m,
        relay_method=sc.sweep.get("relay_method", "exact"),
        trials=sc.trials,
        seed=sc.seed,
        gain_model=sc.gain_model,
        workers=sc.workers,
    )
    rows = [(r.scenario["sigma"] * 1e3, r.scenario["offset"] * 1e3, r.scenario["snr_db"],
             r.n_opt, r.p_out, r.n_opt_mc, r.p_out_mc) for r in optimum_table(spec)]
    write_csv(out_dir / "optimal_n.csv",
              ["sigma_mrad", "theta_prime_mrad", "snr_db", "n_opt_analytic", "p_out_analytic",
               "n_opt_mc", "p_out_mc"],
              rows, _comments(sc, gamma_th=repr(sc.gamma_th), node_section=first,
                              evaluator=evaluator))
    _write_manifest(out_dir, sc, "optimal-n", evaluator, ["optimal_n.csv"])
    return 0


def link_orient(link) -> OrientationModel:
    """Orientation of the first mobile node, used as the sweep default."""
    if isinstance(link, U2uLink):
        return link.orient_tx
    if isinstance(link, U2u2uLink):
        return link.orient_s
    return link.orient_r


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uavlink", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("curve", "outage", "validate", "optimal-n"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--trials", type=int, default=None)
        sp.add_argument("--evaluator", choices=EVALUATOR_CHOICES, default="analytic")
        sp.add_argument("--out-dir", type=Path, default=Path("."))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_config(args.config, seed=args.seed, trials=args.trials)
    except (ConfigError, configparser.Error, OSError) as exc:
        print(f"uavlink: error: {exc}", file=sys.stderr)
        return 2
    args.out_dir.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "curve":
            return cmd_curve(sc, args.evaluator, args.out_dir)
        if args.command == "outage":
            return cmd_outage(sc, args.evaluator, args.out_dir)
        if args.command == "validate":
            return cmd_validate(sc, args.out_dir)
        return cmd_optimal_n(sc, args.evaluator, args.out_dir)
    except ConfigError as exc:
        print(f"uavlink: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
