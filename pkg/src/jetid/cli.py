"""Command-line runner.

    jetid run CONFIG        simulate or ingest data, identify, write a JSON report
    jetid --validate CONFIG check the configuration only
    jetid --models          list registered models

The configuration is an INI file; see README.md for the full schema.  Every
failure prints a single-line JSON error object and exits nonzero.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import datetime as _dt
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core import build_model, get_model, list_models
from .errors import ConfigError, IngestionError, JetIdError
from .recovery import IdentifyConfig, identify
from .simulate import sample_outputs, simulate_jets

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INGEST = 3
EXIT_PIPELINE = 4
EXIT_INTERNAL = 5

SCHEMA = {
    "model": {"name"},
    "theta": {"values"},
    "x0": {"values"},
    "sim": {"t_end", "rtol", "atol", "dt"},
    "window": {"a", "b", "grid_n"},
    "derivatives": {"mode", "stencil"},
    "selection": {"strategy", "tol", "mode", "ratio_guard", "redundancy_tol", "residual_tol"},
    "data": {"csv"},
    "noise": {"sigma", "seed"},
    "output": {"path"},
    "linparam": {"a", "n", "rho", "control", "control_params"},
}


def ingest_csv(path):
    """Read ``t,y1,...,ym`` samples; returns ``(t, y)`` with ``y`` of shape ``(N, m)``."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestionError(f"cannot read {path}: {exc}", path=str(path)) from None
    rows = [r for r in csv.reader(text.splitlines()) if r and any(c.strip() for c in r)]
    if not rows:
        raise IngestionError("empty file", path=str(path))
    header = [c.strip() for c in rows[0]]
    m = len(header) - 1
    if m < 1 or header != ["t"] + [f"y{i}" for i in range(1, m + 1)]:
        raise IngestionError(f"bad header {','.join(header)!r}; expected 't,y1,...,ym'", row=1)
    data = np.empty((len(rows) - 1, m + 1))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != m + 1:
            raise IngestionError(f"row {r} has {len(row)} fields, expected {m + 1}", row=r)
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise IngestionError(f"unparsable field {cell!r} at row {r}, column {header[c]}", row=r, column=header[c]) from None
            if not math.isfinite(v):
                raise IngestionError(f"non-finite field at row {r}, column {header[c]}", row=r, column=header[c])
            data[r - 2, c] = v
    t = data[:, 0]
    for k in range(1, len(t)):
        if t[k] == t[k - 1]:
            raise IngestionError(f"duplicate time {t[k]!r} at row {k + 2}", row=k + 2)
        if t[k] < t[k - 1]:
            raise IngestionError(f"time decreases at row {k + 2}", row=k + 2)
    return t, data[:, 1:]


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _number(sec, key, what, cast=float, default=None):
    if key not in sec:
        return default
    try:
        return cast(sec[key])
    except ValueError:
        raise ConfigError(f"{what}.{key}: cannot parse {sec[key]!r}") from None


@dataclass
class RunConfig:
    model: str
    theta: list[float] | None
    x0: list[float] | None
    sim: dict | None
    data_csv: str | None
    derivatives: str
    stencil: int
    identify: IdentifyConfig
    noise_sigma: list[float] | None
    noise_seed: int | None
    output: str | None
    linparam: dict | None
    echo: dict = field(default_factory=dict)


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"config does not parse: {exc}") from None
    echo = {s: dict(parser[s]) for s in parser.sections()}
    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]", section=sec)
        extra = set(parser[sec]) - SCHEMA[sec]
        if extra:
            raise ConfigError(f"unknown keys in [{sec}]: {sorted(extra)}", section=sec)
    if "model" not in parser or "name" not in parser["model"]:
        raise ConfigError("missing [model] name")
    has_sim, has_data = "sim" in parser, "data" in parser
    if has_sim == has_data:
        raise ConfigError("exactly one of [sim] and [data] is required")

    theta = _floats(parser["theta"]["values"], "theta") if "theta" in parser and "values" in parser["theta"] else None
    x0 = _floats(parser["x0"]["values"], "x0") if "x0" in parser and "values" in parser["x0"] else None
    if has_sim and (theta is None or x0 is None):
        raise ConfigError("[sim] requires [theta] values and [x0] values")

    sim = None
    if has_sim:
        s = parser["sim"]
        sim = {
            "t_end": _number(s, "t_end", "sim", default=10.0),
            "rtol": _number(s, "rtol", "sim", default=1e-10),
            "atol": _number(s, "atol", "sim", default=1e-12),
            "dt": _number(s, "dt", "sim", default=1e-3),
        }
        if not sim["t_end"] > 0 or not sim["dt"] > 0:
            raise ConfigError("[sim] t_end and dt must be positive")
    data_csv = None
    if has_data:
        if "csv" not in parser["data"]:
            raise ConfigError("[data] requires csv")
        data_csv = parser["data"]["csv"]
        if not Path(data_csv).is_absolute():
            data_csv = str(Path(path).resolve().parent / data_csv)

    d = parser["derivatives"] if "derivatives" in parser else {}
    mode = d.get("mode", "analytic" if has_sim else "numeric")
    if mode not in ("analytic", "numeric"):
        raise ConfigError(f"[derivatives] mode must be analytic or numeric, got {mode!r}")
    if has_data and mode == "analytic":
        raise ConfigError("analytic derivatives need a simulation; use mode = numeric with [data]")
    stencil = _number(d, "stencil", "derivatives", int, 5)

    w = parser["window"] if "window" in parser else {}
    a = _number(w, "a", "window", default=0.0)
    b = _number(w, "b", "window", default=sim["t_end"] if sim else None)
    grid_n = _number(w, "grid_n", "window", int, 200)
    if b is not None and not a < b:
        raise ConfigError("[window] requires a < b")
    if sim and b > sim["t_end"]:
        raise ConfigError("[window] b exceeds [sim] t_end")
    if grid_n < 1:
        raise ConfigError("[window] grid_n must be positive")

    sel = parser["selection"] if "selection" in parser else {}
    strategy = sel.get("strategy", "greedy")
    if strategy not in ("greedy", "exhaustive"):
        raise ConfigError(f"[selection] strategy must be greedy or exhaustive, got {strategy!r}")
    solve_mode = sel.get("mode", "oversampled")
    if solve_mode not in ("square", "oversampled"):
        raise ConfigError(f"[selection] mode must be square or oversampled, got {solve_mode!r}")
    icfg = IdentifyConfig(
        window=(a, b if b is not None else math.inf),
        grid_n=grid_n,
        strategy=strategy,
        rank_tol=_number(sel, "tol", "selection", default=1e-8),
        solve_mode=solve_mode,
        ratio_guard=_number(sel, "ratio_guard", "selection", default=1e-8),
        redundancy_tol=_number(sel, "redundancy_tol", "selection", default=1e-4),
        residual_tol=_number(sel, "residual_tol", "selection", default=None),
        stencil=stencil,
        rtol=sim["rtol"] if sim else 1e-10,
        atol=sim["atol"] if sim else 1e-12,
    )

    noise_sigma = noise_seed = None
    if "noise" in parser:
        if not has_sim or mode != "numeric":
            raise ConfigError("[noise] applies only to simulated samples with numeric derivatives")
        noise_sigma = _floats(parser["noise"].get("sigma", "0"), "noise.sigma")
        noise_seed = _number(parser["noise"], "seed", "noise", int, 0)

    linparam = None
    if "linparam" in parser:
        lp = parser["linparam"]
        if "a" not in lp:
            raise ConfigError("[linparam] requires A")
        A = [_floats(row, "linparam.A") for row in lp["a"].split(";") if row.strip()]
        if len({len(r) for r in A}) != 1:
            raise ConfigError("[linparam] A rows differ in length")
        linparam = {
            "A": A,
            "n_poly": _floats(lp.get("n", "1"), "linparam.n"),
            "rho": [_floats(r, "linparam.rho") for r in lp.get("rho", "").split(";") if r.strip()],
            "control": lp.get("control", "none"),
            "control_params": _floats(lp.get("control_params", ""), "linparam.control_params"),
        }

    out = parser["output"].get("path") if "output" in parser else None
    return RunConfig(
        model=parser["model"]["name"].strip(),
        theta=theta,
        x0=x0,
        sim=sim,
        data_csv=data_csv,
        derivatives=mode,
        stencil=stencil,
        identify=icfg,
        noise_sigma=noise_sigma,
        noise_seed=noise_seed,
        output=out,
        linparam=linparam,
        echo=echo,
    )


def resolve_model(cfg: RunConfig):
    if cfg.linparam is not None:
        if cfg.model != "linparam":
            raise ConfigError("[linparam] section given for a model other than linparam")
        from .models.linparam import Control, make_linparam

        try:
            control = Control(cfg.linparam["control"], tuple(cfg.linparam["control_params"]))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        bundle = make_linparam(cfg.linparam["A"], cfg.linparam["n_poly"], cfg.linparam["rho"], control)
        model = build_model(**bundle)
    else:
        model = get_model(cfg.model)
    if cfg.theta is not None and len(cfg.theta) != model.spec.param_dim:
        raise ConfigError(f"[theta] has {len(cfg.theta)} values, model expects {model.spec.param_dim}")
    if cfg.x0 is not None and len(cfg.x0) != model.spec.state_dim:
        raise ConfigError(f"[x0] has {len(cfg.x0)} values, model expects {model.spec.state_dim}")
    return model


def _relative(est, true):
    est, true = np.asarray(est, dtype=float), np.asarray(true, dtype=float)
    scale = np.where(np.abs(true) > 0, np.abs(true), 1.0)
    return np.abs(est - true) / scale


def run(config_path, timestamp: str | None = None) -> dict:
    """Execute a configuration and return the report dictionary (also written to disk)."""
    cfg = load_config(config_path)
    model = resolve_model(cfg)
    if cfg.sim is not None:
        if cfg.derivatives == "analytic":
            data = simulate_jets(model, cfg.x0, cfg.theta, cfg.identify.window, cfg.identify.grid_n,
                                 cfg.sim["rtol"], cfg.sim["atol"])
        else:
            data = sample_outputs(model, cfg.x0, cfg.theta, cfg.sim["t_end"], cfg.sim["dt"],
                                  cfg.sim["rtol"], cfg.sim["atol"], cfg.noise_sigma, cfg.noise_seed)
    else:
        data = ingest_csv(cfg.data_csv)
        if data[1].shape[1] != model.spec.output_dim:
            raise IngestionError(f"CSV has {data[1].shape[1]} output channels, model expects {model.spec.output_dim}")
    rep = identify(model, data, cfg.identify)
    out = {
        "tool": "jetid",
        "version": __version__,
        "timestamp": timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "config": cfg.echo,
        "report": rep.to_dict(),
    }
    rel = {}
    if cfg.theta is not None:
        e = _relative(rep.theta_hat, cfg.theta)
        rel["theta"] = e.tolist()
        rel["theta_max"] = float(e.max())
    if cfg.x0 is not None:
        mask = rep.x0_mask
        e = np.where(mask, _relative(np.nan_to_num(rep.x0_hat), cfg.x0), np.nan)
        rel["x0"] = [None if not m_ else float(v) for v, m_ in zip(e, mask)]
        rel["x0_max"] = float(np.nanmax(e)) if mask.any() else None
    if rel:
        out["relative_error"] = rel
    if cfg.output:
        dest = Path(cfg.output)
        if not dest.is_absolute():
            dest = Path(config_path).resolve().parent / dest
        dest.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        out["_path"] = str(dest)
    return out


def _emit(obj, stream=None):
    print(json.dumps(obj, sort_keys=True), file=stream or sys.stdout)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="jetid", description=__doc__.splitlines()[0])
    ap.add_argument("--models", action="store_true", help="list registered models")
    ap.add_argument("--validate", metavar="CONFIG", help="check a configuration without running it")
    sub = ap.add_subparsers(dest="cmd")
    rp = sub.add_parser("run", help="run an identification experiment")
    rp.add_argument("config")
    args = ap.parse_args(argv)

    try:
        if args.models:
            _emit({"models": list_models()})
            return EXIT_OK
        if args.validate:
            cfg = load_config(args.validate)
            resolve_model(cfg)
            _emit({"status": "valid", "model": cfg.model})
            return EXIT_OK
        if args.cmd == "run":
            out = run(args.config)
            summary = {"status": "ok", "model": out["report"]["model"], "theta_hat": out["report"]["theta_hat"]}
            if "_path" in out:
                summary["report"] = out["_path"]
            else:
                summary["result"] = {k: v for k, v in out.items() if k != "config"}
            _emit(summary)
            return EXIT_OK
        ap.print_usage(sys.stderr)
        _emit({"error": "usage", "message": "expected 'run CONFIG', --validate CONFIG or --models"})
        return EXIT_CONFIG
    except ConfigError as exc:
        _emit(exc.to_dict())
        return EXIT_CONFIG
    except IngestionError as exc:
        _emit(exc.to_dict())
        return EXIT_INGEST
    except JetIdError as exc:
        code = EXIT_CONFIG if exc.code == "registration" else EXIT_PIPELINE
        _emit(exc.to_dict())
        return code
    except Exception as exc:  # noqa: BLE001 - last-resort machine-readable error
        _emit({"error": "internal", "message": f"{type(exc).__name__}: {exc}"})
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
