"""Command line: run experiments from flags or a JSON config, emit artifacts.

Commands
  hermite        moment/coefficient data of an activation -> hermite.json
  esd            centered empirical kernel spectrum -> esd.csv, hist.csv
                 (+ theory.csv from the limit solver)
  law            limiting density or a single Stieltjes point -> law.csv, law.json
  concentration  deviation/floor sweep -> concentration.csv (+ hw.json)
  regress        random-feature vs kernel ridge sweep -> regress.csv

Config resolution order: built-in defaults < --preset < --config file <
explicit flags; then --scale multiplies n, d0 and d1 (rounded). The resolved
config is schema-validated before any compute and echoed into manifest.json.
Exit codes: 0 success, 2 config error, 3 numeric non-convergence.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
import time

import numpy as np

SCHEMA_VERSION = 1

COMMANDS = ("hermite", "esd", "law", "concentration", "regress")

_ACTIVATION_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"enum": ["relu", "arctan", "cos", "sigmoid", "tanh",
                          "identity", "piecewise"]},
        "a": {"type": "number"},
        "b": {"type": "number"},
        "c": {"type": "number"},
    },
    "required": ["name"],
    "additionalProperties": False,
}

_DATA_SCHEMA = {
    "type": "object",
    "properties": {
        "generator": {"enum": ["gaussian-iid-scaled", "sphere-uniform", "file"]},
        "d0": {"type": "integer", "minimum": 1},
        "n": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "path": {"type": ["string", "null"]},
    },
    "required": ["generator", "d0", "n"],
    "additionalProperties": False,
}

_ORDER = {"type": "integer", "minimum": 3, "maximum": 60}
_SEED = {"type": "integer", "minimum": 0}
_POS_NUM = {"type": "number", "exclusiveMinimum": 0}

_PARAMS_SCHEMAS = {
    "hermite": {
        "type": "object",
        "properties": {
            "activation": _ACTIVATION_SCHEMA,
            "order": _ORDER,
            "norms": {"type": "array", "items": _POS_NUM, "minItems": 1},
        },
        "required": ["activation"],
        "additionalProperties": False,
    },
    "esd": {
        "type": "object",
        "properties": {
            "data": _DATA_SCHEMA,
            "activation": _ACTIVATION_SCHEMA,
            "d1": {"type": "integer", "minimum": 1},
            "seed": _SEED,
            "center": {"enum": ["ck-vs-phi", "ck-vs-phi0", "ntk-vs-mean",
                                "ntk-vs-phi0-psi0"]},
            "bins": {"type": "integer", "minimum": 1},
            "theory": {"type": "boolean"},
            "theory_measure": {"enum": ["empirical", "mp"]},
            "grid_points": {"type": "integer", "minimum": 16},
            "v": _POS_NUM,
            "richardson": {"type": "boolean"},
            "order": _ORDER,
        },
        "required": ["data", "activation", "d1"],
        "additionalProperties": False,
    },
    "law": {
        "type": "object",
        "properties": {
            "measure": {"type": "string"},
            "activation": _ACTIVATION_SCHEMA,
            "b": {"type": "number", "minimum": -1, "maximum": 1},
            "z": {"type": ["string", "null"]},
            "grid": {
                "type": "object",
                "properties": {
                    "lo": {"type": "number"},
                    "hi": {"type": "number"},
                    "points": {"type": "integer", "minimum": 2},
                },
                "additionalProperties": False,
            },
            "v": _POS_NUM,
            "tol": _POS_NUM,
            "max_iter": {"type": "integer", "minimum": 1},
            "damping": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "richardson": {"type": "boolean"},
        },
        "required": ["measure"],
        "additionalProperties": False,
    },
    "concentration": {
        "type": "object",
        "properties": {
            "data": _DATA_SCHEMA,
            "activation": _ACTIVATION_SCHEMA,
            "d1_list": {"type": "array", "items": {"type": "integer", "minimum": 1},
                        "minItems": 1},
            "trials": {"type": "integer", "minimum": 1},
            "seed": _SEED,
            "include_ntk": {"type": "boolean"},
            "order": _ORDER,
            "probe": {
                "type": "object",
                "properties": {
                    "matrix": {"enum": ["zero", "identity", "projector", "rot-diag"]},
                    "draws": {"type": "integer", "minimum": 2},
                },
                "required": ["matrix"],
                "additionalProperties": False,
            },
        },
        "required": ["data", "activation", "d1_list"],
        "additionalProperties": False,
    },
    "regress": {
        "type": "object",
        "properties": {
            "activation": _ACTIVATION_SCHEMA,
            "generator": {"enum": ["gaussian-iid-scaled", "sphere-uniform"]},
            "d0": {"type": "integer", "minimum": 1},
            "n_list": {"type": "array", "items": {"type": "integer", "minimum": 1},
                       "minItems": 1},
            "n_test": {"type": "integer", "minimum": 1},
            "lambda": {"type": "number", "minimum": 0},
            "kernel_mode": {"enum": ["ck", "ntk-grad", "ntk-full"]},
            "d1_list": {"type": "array", "items": {"type": "integer", "minimum": 1},
                        "minItems": 1},
            "d1_over_n": {"type": "array", "items": _POS_NUM, "minItems": 1},
            "reps": {"type": "integer", "minimum": 1},
            "sigma_beta": {"type": "number", "minimum": 0},
            "sigma_eps": {"type": "number", "minimum": 0},
            "seed": _SEED,
            "mu0": {"enum": ["empirical", "mp"]},
            "order": _ORDER,
        },
        "required": ["generator", "d0", "n_list", "lambda"],
        "additionalProperties": False,
    },
}

_TOP_SCHEMA = {
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"enum": list(COMMANDS)},
        "params": {"type": "object"},
    },
    "required": ["schema_version", "command", "params"],
    "additionalProperties": False,
}

_DEFAULTS = {
    "hermite": {"order": 40},
    "esd": {"seed": 0, "center": "ck-vs-phi0", "theory": True,
            "theory_measure": "empirical", "grid_points": 600, "v": 1e-4,
            "richardson": True, "order": 40},
    "law": {"z": None, "v": 1e-4, "tol": 1e-12, "max_iter": 50_000,
            "damping": 0.5, "richardson": True},
    "concentration": {"trials": 20, "seed": 0, "include_ntk": True, "order": 40},
    "regress": {"activation": {"name": "sigmoid"}, "n_test": 5000,
                "kernel_mode": "ck", "reps": 50, "sigma_beta": 1.0,
                "sigma_eps": 0.0, "seed": 0, "mu0": "empirical", "order": 40},
}

# paper-dimension parameter sets; --scale shrinks them for desk runs
PRESETS = {
    "fig-law-semi": ("esd", {
        "data": {"generator": "gaussian-iid-scaled", "d0": 2000, "n": 2000, "seed": 0},
        "activation": {"name": "cos"},
        "d1": 200_000,
    }),
    "fig-law": ("esd", {
        "data": {"generator": "gaussian-iid-scaled", "d0": 1000, "n": 1000, "seed": 0},
        "activation": {"name": "arctan"},
        "d1": 100_000,
    }),
    "fig-appendix-b": ("esd", {
        "data": {"generator": "gaussian-iid-scaled", "d0": 1000, "n": 1000, "seed": 0},
        "activation": {"name": "relu"},
        "d1": 100_000,
    }),
    "fig-krr": ("regress", {
        "generator": "gaussian-iid-scaled",
        "d0": 500,
        "n_list": [250, 500],
        "n_test": 5000,
        "lambda": 1e-3,
        "kernel_mode": "ck",
        "d1_over_n": [1, 4, 16, 64, 200],
        "reps": 50,
        "sigma_beta": 2.0,
        "sigma_eps": 1.0,
    }),
}


class ConfigError(Exception):
    pass


class NumericError(Exception):
    pass


def _deep_merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate_config(cfg: dict) -> None:
    """Schema check with a JSON-pointer path in the failure message."""
    import jsonschema

    def first_error(schema, instance, prefix=""):
        v = jsonschema.Draft202012Validator(schema)
        errs = sorted(v.iter_errors(instance), key=lambda e: list(e.absolute_path))
        if errs:
            e = errs[0]
            pointer = prefix + "".join(f"/{p}" for p in e.absolute_path)
            raise ConfigError(f"config error at {pointer or '/'}: {e.message}")

    first_error(_TOP_SCHEMA, cfg)
    cmd = cfg["command"]
    first_error(_PARAMS_SCHEMAS[cmd], cfg["params"], prefix="/params")
    p = cfg["params"]
    if cmd == "regress" and ("d1_list" in p) == ("d1_over_n" in p):
        raise ConfigError("config error at /params: give exactly one of "
                          "d1_list and d1_over_n")
    if cmd == "law" and "activation" in p and "b" in p:
        raise ConfigError("config error at /params: give at most one of "
                          "activation and b")
    if cmd in ("esd", "concentration"):
        d = p["data"]
        if d["generator"] == "file" and not d.get("path"):
            raise ConfigError("config error at /params/data/path: the file "
                              "generator needs a path")


def _scale_params(cmd: str, params: dict, scale: float) -> dict:
    def s(v):
        return max(1, round(v * scale))

    p = copy.deepcopy(params)
    if "data" in p:
        p["data"]["d0"] = s(p["data"]["d0"])
        p["data"]["n"] = s(p["data"]["n"])
    if "d1" in p:
        p["d1"] = s(p["d1"])
    if "d1_list" in p:
        p["d1_list"] = [s(v) for v in p["d1_list"]]
    if cmd == "regress":
        p["d0"] = s(p["d0"])
        p["n_list"] = [s(v) for v in p["n_list"]]
    return p


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _int_list(text: str):
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str):
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ntklab", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file; flags override it")
        sp.add_argument("--preset", choices=sorted(PRESETS),
                        help="named paper parameter set")
        sp.add_argument("--scale", type=float,
                        help="multiply n, d0, d1 (default 0.25 with a preset, else 1)")
        sp.add_argument("--out", help="output directory (default $NTKLAB_OUTDIR or .)")
        sp.add_argument("--threads", type=int, help="cap BLAS threads")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--order", type=int, help="Hermite series order")
        sp.add_argument("--activation", dest="act_name",
                        choices=["relu", "arctan", "cos", "sigmoid", "tanh",
                                 "identity", "piecewise"])
        sp.add_argument("--act-a", type=float)
        sp.add_argument("--act-b", type=float)
        sp.add_argument("--act-c", type=float)
        return sp

    def data_flags(sp):
        sp.add_argument("--generator",
                        choices=["gaussian-iid-scaled", "sphere-uniform", "file"])
        sp.add_argument("--d0", type=int)
        sp.add_argument("--n", type=int)
        sp.add_argument("--data-seed", type=int)
        sp.add_argument("--data-path")

    sp = common(sub.add_parser("hermite", help="activation moment data"))
    sp.add_argument("--norms", type=_float_list)

    sp = common(sub.add_parser("esd", help="centered kernel spectrum"))
    data_flags(sp)
    sp.add_argument("--d1", type=int)
    sp.add_argument("--center", choices=["ck-vs-phi", "ck-vs-phi0", "ntk-vs-mean",
                                         "ntk-vs-phi0-psi0"])
    sp.add_argument("--bins", type=int)
    sp.add_argument("--theory", action="store_true", default=None)
    sp.add_argument("--no-theory", dest="theory", action="store_false")
    sp.add_argument("--theory-measure", choices=["empirical", "mp"])
    sp.add_argument("--grid-points", type=int)
    sp.add_argument("--v", type=float)
    sp.add_argument("--richardson", action="store_true", default=None)
    sp.add_argument("--no-richardson", dest="richardson", action="store_false")

    sp = common(sub.add_parser("law", help="limiting density / Stieltjes point"))
    sp.add_argument("--measure",
                    help="point:c | semicircle:v | mp:gamma | atoms:file.csv")
    sp.add_argument("--b", type=float, help="deform the measure with this b_sigma")
    sp.add_argument("--z", help="single upper-half-plane point like 0+1i")
    sp.add_argument("--grid-lo", type=float)
    sp.add_argument("--grid-hi", type=float)
    sp.add_argument("--grid-points", type=int)
    sp.add_argument("--v", type=float)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--max-iter", type=int)
    sp.add_argument("--damping", type=float)
    sp.add_argument("--richardson", action="store_true", default=None)
    sp.add_argument("--no-richardson", dest="richardson", action="store_false")

    sp = common(sub.add_parser("concentration", help="deviation/floor sweep"))
    data_flags(sp)
    sp.add_argument("--d1-list", type=_int_list)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--include-ntk", dest="include_ntk", action="store_true",
                    default=None)
    sp.add_argument("--no-ntk", dest="include_ntk", action="store_false")
    sp.add_argument("--probe-matrix",
                    choices=["zero", "identity", "projector", "rot-diag"])
    sp.add_argument("--probe-draws", type=int)

    sp = common(sub.add_parser("regress", help="random-feature vs kernel ridge"))
    sp.add_argument("--generator", choices=["gaussian-iid-scaled", "sphere-uniform"])
    sp.add_argument("--d0", type=int)
    sp.add_argument("--n-list", type=_int_list)
    sp.add_argument("--n-test", type=int)
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--kernel-mode", choices=["ck", "ntk-grad", "ntk-full"])
    sp.add_argument("--d1-list", type=_int_list)
    sp.add_argument("--d1-over-n", type=_float_list)
    sp.add_argument("--reps", type=int)
    sp.add_argument("--sigma-beta", type=float)
    sp.add_argument("--sigma-eps", type=float)
    sp.add_argument("--mu0", choices=["empirical", "mp"])
    return ap


def _activation_from_args(args) -> dict | None:
    if args.act_name is None:
        if any(v is not None for v in (args.act_a, args.act_b, args.act_c)):
            raise ConfigError("activation parameters given without --activation")
        return None
    act = {"name": args.act_name}
    for key, val in (("a", args.act_a), ("b", args.act_b), ("c", args.act_c)):
        if val is not None:
            act[key] = val
    return act


def _flag_params(args) -> dict:
    """Per-command params assembled from the explicitly given flags."""
    cmd = args.command
    p: dict = {}
    act = _activation_from_args(args)
    if act is not None:
        p["activation"] = act
    if args.order is not None:
        p["order"] = args.order
    if cmd in ("esd", "concentration"):
        data = {}
        for key, val in (("generator", args.generator), ("d0", args.d0),
                         ("n", args.n), ("seed", args.data_seed),
                         ("path", args.data_path)):
            if val is not None:
                data[key] = val
        if data:
            p["data"] = data
    if cmd != "law" and args.seed is not None:
        p["seed"] = args.seed

    if cmd == "hermite":
        if args.norms is not None:
            p["norms"] = args.norms
    elif cmd == "esd":
        for key, val in (("d1", args.d1), ("center", args.center),
                         ("bins", args.bins), ("theory", args.theory),
                         ("theory_measure", args.theory_measure),
                         ("grid_points", args.grid_points), ("v", args.v),
                         ("richardson", args.richardson)):
            if val is not None:
                p[key] = val
    elif cmd == "law":
        grid = {}
        if args.grid_lo is not None:
            grid["lo"] = args.grid_lo
        if args.grid_hi is not None:
            grid["hi"] = args.grid_hi
        if args.grid_points is not None:
            grid["points"] = args.grid_points
        if grid:
            p["grid"] = grid
        for key, val in (("measure", args.measure), ("b", args.b), ("z", args.z),
                         ("v", args.v), ("tol", args.tol),
                         ("max_iter", args.max_iter), ("damping", args.damping),
                         ("richardson", args.richardson)):
            if val is not None:
                p[key] = val
    elif cmd == "concentration":
        for key, val in (("d1_list", args.d1_list), ("trials", args.trials),
                         ("include_ntk", args.include_ntk)):
            if val is not None:
                p[key] = val
        if args.probe_matrix is not None:
            p["probe"] = {"matrix": args.probe_matrix}
            if args.probe_draws is not None:
                p["probe"]["draws"] = args.probe_draws
    elif cmd == "regress":
        for key, val in (("generator", args.generator), ("d0", args.d0),
                         ("n_list", args.n_list), ("n_test", args.n_test),
                         ("lambda", args.lam), ("kernel_mode", args.kernel_mode),
                         ("d1_list", args.d1_list), ("d1_over_n", args.d1_over_n),
                         ("reps", args.reps), ("sigma_beta", args.sigma_beta),
                         ("sigma_eps", args.sigma_eps), ("mu0", args.mu0)):
            if val is not None:
                p[key] = val
    return p


def resolve_config(args) -> dict:
    cmd = args.command
    params = copy.deepcopy(_DEFAULTS[cmd])
    scale = args.scale if args.scale is not None else 1.0
    if args.preset is not None:
        preset_cmd, preset_params = PRESETS[args.preset]
        if preset_cmd != cmd:
            raise ConfigError(f"preset {args.preset!r} belongs to command "
                              f"{preset_cmd!r}, not {cmd!r}")
        params = _deep_merge(params, preset_params)
        if args.scale is None:
            scale = 0.25
    if args.config is not None:
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        if "command" in file_cfg and file_cfg["command"] != cmd:
            raise ConfigError(f"config file is for command "
                              f"{file_cfg['command']!r}, not {cmd!r}")
        params = _deep_merge(params, file_cfg.get("params", file_cfg))
    params = _deep_merge(params, _flag_params(args))
    if scale != 1.0:
        params = _scale_params(cmd, params, scale)
    cfg = {"schema_version": SCHEMA_VERSION, "command": cmd, "params": params}
    validate_config(cfg)
    return cfg


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


def _parse_measure(text: str):
    from . import datagen

    kind, _, arg = text.partition(":")
    if kind == "point":
        return datagen.SpectralMeasure.point_mass(float(arg or 1.0))
    if kind == "semicircle":
        return datagen.SpectralMeasure.semicircle(float(arg or 1.0))
    if kind == "mp":
        if not arg:
            raise ConfigError("mp measure needs a ratio, like mp:0.5")
        return datagen.SpectralMeasure.marchenko_pastur(float(arg))
    if kind == "atoms":
        if not arg:
            raise ConfigError("atoms measure needs a CSV path")
        from .artifacts import read_csv_columns

        cols = read_csv_columns(arg)
        if "eigenvalue" not in cols:
            raise ConfigError(f"{arg} has no 'eigenvalue' column")
        return datagen.SpectralMeasure.from_atoms(cols["eigenvalue"])
    raise ConfigError(f"unknown measure {text!r}; use point:c, semicircle:v, "
                      "mp:gamma or atoms:file.csv")


def _parse_z(text: str) -> complex:
    try:
        t = text.strip().replace("i", "j").replace(" ", "")
        if t in ("j", "+j"):
            t = "1j"
        z = complex(t)
    except ValueError:
        raise ConfigError(f"cannot parse {text!r} as a complex number") from None
    if z.imag <= 0:
        raise ConfigError("evaluation point must lie in the upper half plane")
    return z


def _fmt_complex(z: complex, digits: int = 5) -> str:
    re, im = round(z.real, digits), round(z.imag, digits)
    re_s = f"{re:.{digits}f}".rstrip("0").rstrip(".")
    im_s = f"{abs(im):.{digits}f}".rstrip("0").rstrip(".")
    if im_s == "1":
        im_s = ""
    sign = "-" if im < 0 else ("+" if re_s not in ("0", "-0") else "")
    if re_s in ("0", "-0"):
        return f"{sign}{im_s}i"
    return f"{re_s}{sign}{im_s}i"


def _check_budget(entries: int, what: str) -> None:
    from .util import HARD_ENTRY_CAP

    if entries > HARD_ENTRY_CAP:
        raise ConfigError(
            f"refusing to allocate {what}: {entries} entries exceeds the "
            f"{HARD_ENTRY_CAP} cap; shrink the dimensions or --scale")


def _activation(p: dict):
    from .activation import normalize

    spec = p["activation"]
    kw = {k: spec[k] for k in ("a", "b", "c") if k in spec}
    return normalize(spec["name"], **kw)


def _make_data(d: dict):
    from .datagen import generate

    return generate(d["generator"], d["d0"], d["n"], seed=d.get("seed", 0),
                    path=d.get("path"))


class _Stages:
    def __init__(self):
        self.timings: dict[str, float] = {}
        self._t0 = None
        self._name = None

    def start(self, name: str):
        now = time.perf_counter()
        if self._name is not None:
            self.timings[self._name] = self.timings.get(self._name, 0.0) + now - self._t0
        self._name, self._t0 = name, now

    def stop(self):
        self.start(None)
        self._name = None


def _run_hermite(p, outdir, stages, lines):
    from .activation import hermite_data, zeta_table
    from .artifacts import save_json

    act = _activation(p)
    stages.start("hermite")
    h = hermite_data(act, order=p["order"])
    payload = {
        "activation": p["activation"],
        "order": p["order"],
        "b_sigma": h.b_sigma,
        "a_sigma": h.a_sigma,
        "zeta": list(h.zeta),
        "eta": list(h.eta),
        "floor_ck": h.floor_ck,
        "floor_ntk": h.floor_ntk,
        "tail_mass": h.tail_mass,
    }
    if "norms" in p:
        tab = zeta_table(act, p["norms"], order=p["order"])
        payload["norms"] = list(map(float, p["norms"]))
        payload["zeta_by_norm"] = [list(tab[:, j]) for j in range(tab.shape[1])]
    stages.start("write")
    save_json(os.path.join(outdir, "hermite.json"), payload)
    lines.append(f"b_sigma={h.b_sigma:.9f} a_sigma={h.a_sigma:.9f} "
                 f"floor_ck={h.floor_ck:.9f} floor_ntk={h.floor_ntk:.9f}")
    return ["hermite.json"], {}


def _solve_theory(measure, act, p, outdir, stages, lines, fname="theory.csv"):
    """Deform the input measure, solve the limit law, write curve + diagnostics."""
    from . import law
    from .activation import hermite_data
    from .artifacts import save_density_csv, save_json

    stages.start("theory")
    b = hermite_data(act).b_sigma if act is not None else p.get("b", 0.0)
    tilde = law.deform(measure, b)
    sol = law.solve_density(tilde, v=p.get("v", 1e-4),
                            richardson=p.get("richardson", True))
    stages.start("write")
    save_density_csv(os.path.join(outdir, fname), sol.x, sol.density)
    diag = {
        "residuals": {
            "beta": float(np.max(sol.res_beta)),
            "consistency": float(np.max(sol.res_consistency)),
        },
        "v": sol.v,
        "richardson": sol.richardson,
        "converged": bool(np.all(sol.converged)),
        "b_sigma": float(b),
    }
    save_json(os.path.join(outdir, os.path.splitext(fname)[0] + ".json"), diag)
    if not np.all(sol.converged):
        raise NumericError("law solver failed to converge: "
                           + "; ".join(sol.warnings))
    mass = law.moments(sol)["mass"]
    lines.append(f"theory curve mass={mass:.4f}")
    return [fname, os.path.splitext(fname)[0] + ".json"], sol


def _run_esd(p, outdir, stages, lines):
    from . import spectral
    from .artifacts import save_esd_csv, save_hist_csv
    from .datagen import empirical_measure, mp_measure
    from .kernels import build_empirical, deterministic_equivalents, expected_phi, expected_psi

    act = _activation(p)
    d = p["data"]
    _check_budget(p["d1"] * d["n"], "the feature matrix")
    stages.start("data")
    X = _make_data(d)
    mode = p["center"]
    include_ntk = mode.startswith("ntk")
    stages.start("kernel")
    km = build_empirical(X.X, act, p["d1"], seed=p["seed"], include_ntk=include_ntk)
    refs: dict = {}
    if mode == "ck-vs-phi":
        refs["phi"] = expected_phi(X.X, act, method="hermite-series", order=p["order"])
    elif mode == "ck-vs-phi0":
        refs["phi0"] = deterministic_equivalents(X.X, act, include_psi=False)[0]
    elif mode == "ntk-vs-mean":
        refs["phi"] = expected_phi(X.X, act, method="hermite-series", order=p["order"])
        refs["psi"] = expected_psi(X.X, act, method="hermite-series", order=p["order"])
    else:
        refs["phi0"], refs["psi0"] = deterministic_equivalents(X.X, act)
    stages.start("center")
    ens = spectral.center(km, mode, **refs)
    stages.start("esd")
    sample = spectral.esd(ens)
    edges, density = spectral.histogram(sample, bins=p.get("bins"))
    stages.start("write")
    save_esd_csv(os.path.join(outdir, "esd.csv"), sample)
    save_hist_csv(os.path.join(outdir, "hist.csv"), edges, density)
    files = ["esd.csv", "hist.csv"]
    if p["theory"]:
        from .law import density_cdf

        mu0 = (empirical_measure(X) if p["theory_measure"] == "empirical"
               else mp_measure(d["n"] / d["d0"]))
        tf, sol = _solve_theory(mu0, act, p, outdir, stages, lines)
        files += tf
        ks = spectral.ks_distance(sample, density_cdf(sol))
        lines.append(f"KS(esd, theory) = {ks:.4f}")
    lines.append(f"{sample.n} eigenvalues in [{sample.eigenvalues[0]:.4f}, "
                 f"{sample.eigenvalues[-1]:.4f}]")
    return files, {"data": d.get("seed", 0), "weights": p["seed"]}


def _run_law(p, outdir, stages, lines):
    from . import law
    from .artifacts import save_json

    measure = _parse_measure(p["measure"])
    act = _activation(p) if "activation" in p else None
    if act is None and "b" not in p:
        # measure is used as-is (already the deformed input)
        tilde = measure
    else:
        from .activation import hermite_data

        b = hermite_data(act).b_sigma if act is not None else p["b"]
        tilde = law.deform(measure, b)

    files = []
    if p.get("z"):
        z = _parse_z(p["z"])
        stages.start("point")
        sol = law.solve_point(tilde, z, tol=p["tol"], max_iter=p["max_iter"],
                              damping=p["damping"])
        if not sol.converged:
            raise NumericError(f"fixed point did not converge at z={p['z']}")
        stages.start("write")
        save_json(os.path.join(outdir, "law.json"), {
            "point": {"z": [z.real, z.imag], "m": [sol.m.real, sol.m.imag],
                      "beta": [sol.beta.real, sol.beta.imag]},
            "iterations": sol.iterations,
            "residuals": {"beta": sol.res_beta, "consistency": sol.res_consistency},
        })
        lines.append(f"m({_fmt_complex(z)}) = {_fmt_complex(sol.m)}")
        return ["law.json"], {}

    stages.start("law")
    grid = None
    if "grid" in p:
        g = p["grid"]
        if not {"lo", "hi", "points"} <= g.keys():
            raise ConfigError("grid needs lo, hi and points")
        if g["hi"] <= g["lo"]:
            raise ConfigError("grid hi must exceed lo")
        grid = np.linspace(g["lo"], g["hi"], g["points"])
    sol = law.solve_density(tilde, grid=grid, v=p["v"], tol=p["tol"],
                            max_iter=p["max_iter"], damping=p["damping"],
                            richardson=p["richardson"])
    stages.start("write")
    from .artifacts import save_density_csv

    save_density_csv(os.path.join(outdir, "law.csv"), sol.x, sol.density)
    save_json(os.path.join(outdir, "law.json"), {
        "residuals": {"beta": float(np.max(sol.res_beta)),
                      "consistency": float(np.max(sol.res_consistency))},
        "v": sol.v, "richardson": sol.richardson,
        "converged": bool(np.all(sol.converged)),
    })
    files += ["law.csv", "law.json"]
    if not np.all(sol.converged):
        raise NumericError("law solver failed to converge: "
                           + "; ".join(sol.warnings))
    lines.append(f"density on [{sol.x[0]:.4f}, {sol.x[-1]:.4f}], "
                 f"mass={law.moments(sol)['mass']:.4f}")
    return files, {}


def _run_concentration(p, outdir, stages, lines):
    from . import concentration
    from .artifacts import save_concentration_csv, save_json

    act = _activation(p)
    d = p["data"]
    _check_budget(max(p["d1_list"]) * d["n"], "the feature matrix")
    stages.start("data")
    X = _make_data(d)
    stages.start("sweep")
    report = concentration.sweep_op_norm(X, act, p["d1_list"], trials=p["trials"],
                                         seed=p["seed"],
                                         include_ntk=p["include_ntk"],
                                         order=p["order"])
    stages.start("write")
    save_concentration_csv(os.path.join(outdir, "concentration.csv"), report)
    files = ["concentration.csv"]
    if len(p["d1_list"]) > 1:
        lines.append(f"op_ck log-log slope = {report.slope_loglog():.4f}")
    if "probe" in p:
        stages.start("probe")
        probe = concentration.hanson_wright_probe(
            X, act, matrix_kind=p["probe"]["matrix"],
            draws=p["probe"].get("draws", 2000), seed=p["seed"])
        stages.start("write")
        save_json(os.path.join(outdir, "hw.json"), {
            "matrix": p["probe"]["matrix"],
            "mean": probe.mean,
            "stderr": probe.stderr,
            "scaled_second_moment": probe.scaled_second_moment,
            "tail_t": list(map(float, probe.tail_t)),
            "tail_freq": list(map(float, probe.tail_freq)),
        })
        files.append("hw.json")
        lines.append(f"probe mean = {probe.mean:.4f} +- {probe.stderr:.4f}")
    return files, {"data": d.get("seed", 0), "trial_base": p["seed"]}


def _run_regress(p, outdir, stages, lines):
    from . import regression
    from .artifacts import save_regression_csv
    from .datagen import mp_measure

    act = _activation(p)
    lam = p["lambda"]
    reports = []
    for n in p["n_list"]:
        d1_list = p.get("d1_list") or [max(1, round(m * n)) for m in p["d1_over_n"]]
        _check_budget(max(d1_list) * (n + p["n_test"]), "the feature matrices")
        stages.start("task")
        task = regression.make_task(p["generator"], p["d0"], n,
                                    n_test=p["n_test"],
                                    sigma_beta=p["sigma_beta"],
                                    sigma_eps=p["sigma_eps"], seed=p["seed"])
        mu0 = mp_measure(n / p["d0"]) if p["mu0"] == "mp" else None
        stages.start("sweep")
        reports.extend(regression.sweep(task, act, d1_list, lam,
                                        kernel_mode=p["kernel_mode"],
                                        reps=p["reps"], base_seed=p["seed"],
                                        order=p["order"], mu0=mu0))
    stages.start("write")
    save_regression_csv(os.path.join(outdir, "regress.csv"), reports)
    last = reports[-1]
    lines.append(f"final cell: n={last.n} d1={last.d1} test_rf={last.test_rf:.5f} "
                 f"test_asym={last.test_asym:.5f}")
    return ["regress.csv"], {"task": p["seed"], "rep_base": p["seed"]}


_RUNNERS = {
    "hermite": _run_hermite,
    "esd": _run_esd,
    "law": _run_law,
    "concentration": _run_concentration,
    "regress": _run_regress,
}


def run(cfg: dict, outdir: str) -> dict:
    """Execute a validated config; returns the manifest (also written to disk)."""
    from .artifacts import save_json

    os.makedirs(outdir, exist_ok=True)
    t0 = time.perf_counter()
    stages = _Stages()
    lines: list[str] = []
    files, seeds = _RUNNERS[cfg["command"]](cfg["params"], outdir, stages, lines)
    stages.stop()
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": cfg["command"],
        "config": cfg,
        "wall_time_s": time.perf_counter() - t0,
        "stage_timings_s": {k: round(v, 6) for k, v in stages.timings.items()},
        "seeds": seeds,
        "files": [{"name": f, "bytes": os.path.getsize(os.path.join(outdir, f))}
                  for f in files],
    }
    save_json(os.path.join(outdir, "manifest.json"), manifest)
    for line in lines:
        print(line)
    print(f"wrote {', '.join(f['name'] for f in manifest['files'])} "
          f"and manifest.json to {outdir}")
    return manifest


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    outdir = args.out or os.environ.get("NTKLAB_OUTDIR") or "."
    try:
        if args.threads is not None:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=args.threads):
                run(cfg, outdir)
        else:
            run(cfg, outdir)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except np.linalg.LinAlgError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
