"""Command-line front end.

Every command reads a flat TOML table (``--config``) and ``--set key=value``
overrides, validates it against a per-command schema and writes its outputs
into ``--out``.  Exit codes: 0 success, 1 monitor or verification violation,
2 invalid configuration or unwritable output, 3 blow-up.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import analysis as an
from . import flow
from . import geometry as geo
from . import io as tio
from . import solitons as so
from .errors import (
    BlowUpError,
    ConditionError,
    ConfigError,
    LabError,
    MonitorViolation,
    VerificationFailure,
)

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3
COMMANDS = ("flow-run", "flow-check", "soliton-verify", "spectrum", "volume-growth", "identity-suite")
REQUIRED = object()


def _bad(key, message):
    return ConfigError(message, key=key)


# ---------------------------------------------------------------------------
# schema


@dataclass(frozen=True)
class Key:
    kind: str                 # float, int, bool, str, vec, tensor
    default: object = None
    check: object = None      # callable(value) -> error message or None
    choices: tuple = ()


def _pos(v):
    return None if v > 0 else "must be positive"


def _nonneg(v):
    return None if v >= 0 else "must be non-negative"


def _sigma(v):
    return None if 0 < v <= 1 else "must lie in (0, 1]"


def _theta(v):
    return None if 0 <= v < math.pi / 2 else "must lie in [0, pi/2)"


def _theta_min(v):
    return None if 0 <= v < 1 else "must lie in [0, 1)"


MODEL_KEYS = {
    "model": Key("str", REQUIRED, choices=("hyperplane", "grim_reaper", "tilted_grim_reaper",
                                           "bowl", "parabola")),
    "theta": Key("float", 0.0, _theta),
    "n": Key("int", None, _pos),
    "normal": Key("vec", None),
    "bowl_R_max": Key("float", 10.0, _pos),
    "bowl_step": Key("float", 1e-3, _pos),
}

DOMAIN_KEYS = {
    "domain": Key("str", REQUIRED, choices=("interval", "rectangle", "disc", "ellipse")),
    "lo": Key("vec", None),
    "hi": Key("vec", None),
    "center": Key("vec", None),
    "radius": Key("float", None, _pos),
    "semi_axes": Key("vec", None),
    "psi": Key("str", "zero", choices=("zero", "affine", "quadratic")),
    "psi_b": Key("vec", None),
    "psi_A": Key("tensor", None),
    "psi_Q": Key("tensor", None),
    "w": Key("vec", REQUIRED),
}

SCHEMAS = {
    "flow-run": {
        **DOMAIN_KEYS,
        "h": Key("float", 0.01, _pos),
        "sigma": Key("float", 0.5, _sigma),
        "T_max": Key("float", 1.0, _nonneg),
        "tol_steady": Key("float", 1e-8, _pos),
        "dt": Key("float", None, _pos),
        "record_every": Key("int", 1000, _pos),
        "theta_min": Key("float", 0.5, _theta_min),
        "blowup_bound": Key("float", 1e6, _pos),
        "barrier_mu_K": Key("float", None, _pos),
        "barrier_points": Key("tensor", None),
        "tol_barrier": Key("float", 1e-8, _pos),
        "tol_monitor": Key("float", 1e-10, _pos),
        "strict": Key("bool", True),
        "max_steps": Key("int", 50_000_000, _pos),
    },
    "flow-check": dict(DOMAIN_KEYS, w=Key("vec", None)),
    "soliton-verify": {
        **MODEL_KEYS,
        "samples": Key("int", 10000, _pos),
        "tol": Key("float", None, _pos),
        "window_lo": Key("vec", None),
        "window_hi": Key("vec", None),
    },
    "spectrum": {
        **MODEL_KEYS,
        "box_lo": Key("vec", None),
        "box_hi": Key("vec", None),
        "h": Key("float", 0.01, _pos),
        "a": Key("vec", [1.0]),
        "tol": Key("float", 1e-9, _pos),
    },
    "volume-growth": {
        **MODEL_KEYS,
        "a": Key("float", REQUIRED, _pos),
        "R0": Key("float", REQUIRED, _pos),
        "R1": Key("float", REQUIRED, _pos),
        "samples": Key("int", 401, _pos),
        "n_radii": Key("int", 31, _pos),
    },
    "identity-suite": {
        **MODEL_KEYS,
        "h": Key("float", 2e-3, _pos),
        "samples": Key("int", 10000, _pos),
        "window_lo": Key("vec", None),
        "window_hi": Key("vec", None),
    },
}


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    out: str = "out"

    def __getitem__(self, key):
        return self.params[key]


def _coerce(key, spec: Key, value):
    try:
        if spec.kind == "float":
            if isinstance(value, bool):
                raise TypeError
            v = float(value)
            if not math.isfinite(v):
                raise ValueError
        elif spec.kind == "int":
            if isinstance(value, bool) or float(value) != int(value):
                raise TypeError
            v = int(value)
        elif spec.kind == "bool":
            if not isinstance(value, bool):
                raise TypeError
            v = value
        elif spec.kind == "str":
            v = str(value)
            if spec.choices and v not in spec.choices:
                raise _bad(key, f"{key}: must be one of {', '.join(spec.choices)}")
        elif spec.kind == "vec":
            v = [float(x) for x in np.atleast_1d(np.asarray(value, dtype=float))]
        else:
            v = np.asarray(value, dtype=float).tolist()
    except ConfigError:
        raise
    except (TypeError, ValueError):
        raise _bad(key, f"{key}: expected {spec.kind}, got {value!r}") from None
    if spec.check is not None:
        msg = spec.check(v)
        if msg:
            raise _bad(key, f"{key}: {msg} (got {value!r})")
    return v


def _parse_override(text):
    if "=" not in text:
        raise _bad(text, f"{text}: overrides must look like key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value


def parse_config(command: str, path: str | None = None, overrides=(), out: str | None = None) -> RunConfig:
    """Merge a TOML file and ``key=value`` overrides into a validated config."""
    if command not in SCHEMAS:
        raise _bad("command", f"command: unknown command {command!r}")
    raw = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise _bad("config", f"config: cannot read {path}: {exc.strerror}") from None
        except tomllib.TOMLDecodeError as exc:
            raise _bad("config", f"config: {path} is not valid TOML ({exc})") from None
    raw.pop("command", None)
    if out is None:
        out = raw.pop("out", "out")
    else:
        raw.pop("out", None)
    for item in overrides:
        k, v = _parse_override(item)
        raw[k] = v
    schema = SCHEMAS[command]
    for key in raw:
        if key not in schema:
            raise _bad(key, f"{key}: unknown key for {command}")
    params = {}
    for key, spec in schema.items():
        if key in raw:
            params[key] = _coerce(key, spec, raw[key])
        elif spec.default is REQUIRED:
            raise _bad(key, f"{key}: required key missing for {command}")
        else:
            params[key] = spec.default
    return RunConfig(command, params, str(out))


# ---------------------------------------------------------------------------
# builders


def _vec_len(p, key, n):
    v = p[key]
    if v is None or len(v) != n:
        raise _bad(key, f"{key}: expected {n} values")
    return np.array(v)


def build_domain(p):
    kind = p["domain"]
    try:
        if kind in ("interval", "rectangle"):
            for key in ("lo", "hi"):
                if p[key] is None:
                    raise _bad(key, f"{key}: required for domain {kind}")
            lo, hi = np.array(p["lo"]), np.array(p["hi"])
            if lo.shape != hi.shape:
                raise _bad("hi", "hi: must have as many values as lo")
            if kind == "interval" and lo.size != 1:
                raise _bad("lo", "lo: an interval takes one value")
            return flow.rectangle(lo, hi)
        if p["center"] is None:
            raise _bad("center", f"center: required for domain {kind}")
        c = np.array(p["center"])
        if kind == "disc":
            if p["radius"] is None:
                raise _bad("radius", "radius: required for domain disc")
            return flow.disc(c, p["radius"])
        return flow.ellipse(c, _vec_len(p, "semi_axes", c.size))
    except LabError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise _bad("domain", f"domain: {exc}") from None


def build_psi(p, n, k):
    kind = p["psi"]
    b = np.zeros(k) if p["psi_b"] is None else np.array(p["psi_b"])
    try:
        if kind == "zero":
            return flow.BoundaryData.zero(n, k)
        if p["psi_A"] is None and kind == "affine":
            raise _bad("psi_A", "psi_A: required for affine psi")
        A = np.zeros((n, k)) if p["psi_A"] is None else np.array(p["psi_A"], float).reshape(n, k)
        if kind == "affine":
            return flow.BoundaryData.affine(A, b)
        if p["psi_Q"] is None:
            raise _bad("psi_Q", "psi_Q: required for quadratic psi")
        Q = np.array(p["psi_Q"], float).reshape(k, n, n)
        return flow.BoundaryData.quadratic(Q, A, b)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise _bad(f"psi_{'Q' if kind == 'quadratic' else 'A'}",
                          f"psi: coefficients do not match n={n}, k={k} ({exc})") from None


def build_model(p) -> so.SolitonModel:
    kind = p["model"]
    if kind == "hyperplane":
        return so.Hyperplane(p["n"] or 1, p["normal"])
    if kind == "grim_reaper":
        return so.GrimReaper()
    if kind == "tilted_grim_reaper":
        return so.TiltedGrimReaper(p["theta"])
    if kind == "bowl":
        n = p["n"] or 2
        if n < 2:
            raise _bad("n", "n: the bowl needs n >= 2")
        try:
            prof = so.bowl_profile(n, p["bowl_R_max"], p["bowl_step"])
        except LabError as exc:
            raise _bad("bowl_step", f"bowl_step: {exc}") from None
        return so.Bowl(prof)
    return so.parabola_model()


def _default_box(model):
    """The model's verification window, or the cube inscribed in it."""
    win = model.verification_window()
    if isinstance(win, so.Box):
        return win
    r = win.radius / math.sqrt(model.n)
    c = np.asarray(win.center, float)
    return so.Box(c - r, c + r)


def _box_from(p, model, lo_key, hi_key):
    if p[lo_key] is None and p[hi_key] is None:
        return _default_box(model)
    lo = _vec_len(p, lo_key, model.n)
    hi = _vec_len(p, hi_key, model.n)
    return so.Box(lo, hi)


# ---------------------------------------------------------------------------
# commands


def _out(cfg, name):
    return os.path.join(cfg.out, name)


def _emit(cfg, name, lines):
    for line in lines:
        print(line)
    tio.write_text(lines, _out(cfg, name))


def cmd_flow_check(cfg):
    p = cfg.params
    spec = build_domain(p)
    k = len(p["w"]) if p["w"] else 1
    psi = build_psi(p, spec.n, k)
    value, ok = flow.check_small_data_condition(spec, psi)
    lines = [
        f"diameter = {spec.diameter:.12g}",
        f"n = {spec.n}",
        f"sup|D^2 psi| = {psi.sup_D2psi:.12g}",
        f"sup_boundary|D psi| = {psi.sup_Dpsi_boundary(spec):.12g}",
        f"value = {value:.12g}",
        "condition satisfied" if ok else "condition not satisfied",
    ]
    _emit(cfg, "flow_check.txt", lines)
    return EXIT_OK


def cmd_flow_run(cfg):
    p = cfg.params
    spec = build_domain(p)
    w = np.array(p["w"])
    if np.linalg.norm(w) > 1 + 1e-12:
        raise _bad("w", "w: |w| must not exceed 1")
    psi = build_psi(p, spec.n, w.size)
    pts = p["barrier_points"]
    if pts is not None:
        pts = tuple(np.atleast_2d(np.array(pts, float)))
        for q in pts:
            try:
                spec.require_boundary_point(q)
            except LabError as exc:
                raise _bad("barrier_points", f"barrier_points: {exc}") from None
    if p["h"] > spec.diameter / 4:
        raise _bad("h", f"h: must not exceed D/4 = {spec.diameter / 4:.6g}")
    config = flow.FlowConfig(
        h=p["h"], sigma=p["sigma"], T_max=p["T_max"], tol_steady=p["tol_steady"],
        record_every=p["record_every"], dt=p["dt"], theta_min=p["theta_min"],
        blowup_bound=p["blowup_bound"], barrier_points=pts, barrier_mu_K=p["barrier_mu_K"],
        tol_barrier=p["tol_barrier"], tol_monitor=p["tol_monitor"], strict=p["strict"],
        max_steps=p["max_steps"],
    )
    code = EXIT_OK
    try:
        state, diag = flow.run(spec, psi, w, config)
    except MonitorViolation as exc:
        print(f"monitor violation: {exc}", file=sys.stderr)
        _emit(cfg, "flow_summary.txt", ["status = violation", f"detail = {exc}"])
        return EXIT_VIOLATION
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        _emit(cfg, "flow_summary.txt", ["status = blow-up", f"detail = {exc}"])
        return EXIT_BLOWUP
    tio.write_diagnostics_csv(diag, _out(cfg, "diagnostics.csv"))
    if spec.n == 1:
        tio.write_field_csv(state, _out(cfg, "field.csv"))
    elif spec.n == 2:
        tio.write_field_vtk(state, _out(cfg, "field.vtk"))
    if diag.violations:
        code = EXIT_VIOLATION
    last = diag.records[-1]
    bal = flow.volume_balance(diag)
    balw = flow.volume_balance(diag, weighted=True)
    lines = [
        f"status = {diag.status}",
        f"t = {state.t:.12g}",
        f"steps = {state.steps}",
        f"steady_res = {last.steady_res:.6e}",
        f"sup_f = {float(np.max(last.sup_f)):.12g}",
        f"sup_bdry_grad = {last.sup_bdry_grad:.6e}",
        f"gradient_bound = {last.gradient_bound:.6e}",
        f"barrier_margin_min = {np.nanmin(diag.column('barrier_margin')):.6e}",
        f"volume_balance_relative = {bal.relative:.6e}",
        f"weighted_volume_balance_relative = {balw.relative:.6e}",
        f"violations = {len(diag.violations)}",
    ]
    _emit(cfg, "flow_summary.txt", lines)
    return code


def cmd_soliton_verify(cfg):
    p = cfg.params
    model = build_model(p)
    win = None
    if p["window_lo"] is not None or p["window_hi"] is not None:
        win = _box_from(p, model, "window_lo", "window_hi")
    try:
        report = so.model_verify(model, win, samples=p["samples"], tol=p["tol"])
        code = EXIT_OK
    except VerificationFailure as exc:
        report = exc.report
        code = EXIT_VIOLATION
    lines = [f"model = {model!r}"] + list(report.lines())
    lines.append("verified" if code == EXIT_OK else "verification failed")
    _emit(cfg, "soliton_verify.txt", lines)
    return code


def cmd_spectrum(cfg):
    p = cfg.params
    model = build_model(p)
    box = _box_from(p, model, "box_lo", "box_hi")
    try:
        mesh = an.build_weighted_mesh(model, box, p["h"])
    except LabError as exc:
        raise _bad("box_lo", f"box_lo: {exc}") from None
    spec = an.drift_first_eigenvalue(mesh, tol=p["tol"])
    rows = []
    lines = [f"model = {model!r}", f"box = {list(box.lo)} .. {list(box.hi)}",
             f"lambda1 = {spec.lambda1:.12g}", f"residual = {spec.residual:.3e}",
             f"iterations = {spec.iterations}"]
    for a in p["a"]:
        if not a > 0:
            raise _bad("a", f"a: must be positive (got {a})")
        val, ok = an.stability_condition(mesh, a)
        rows.append((a, val, spec.lambda1))
        lines.append(f"a = {a:.12g}: sup_value = {val:.6e} condition {'holds' if ok else 'fails'}")
    tio.write_sweep_csv(rows, _out(cfg, "spectrum.csv"))
    _emit(cfg, "spectrum.txt", lines)
    return EXIT_OK


def cmd_volume_growth(cfg):
    p = cfg.params
    model = build_model(p)
    if p["R1"] <= p["R0"]:
        raise _bad("R1", "R1: must exceed R0")
    try:
        rep = an.weighted_volume_growth(model, p["a"], p["R0"], p["R1"], p["samples"], p["n_radii"])
    except ConditionError as exc:
        raise _bad("a", f"a: {exc}") from None
    tio.write_growth_csv(rep, _out(cfg, "growth.csv"))
    lines = [f"model = {model!r}", f"a = {rep.a:.12g}", f"sup_H2 = {rep.sup_H2:.12g}",
             f"eps = {rep.eps:.12g}", f"min_ratio = {rep.min_ratio:.12g}"]
    _emit(cfg, "volume_growth.txt", lines)
    return EXIT_OK


def cmd_identity_suite(cfg):
    p = cfg.params
    model = build_model(p)
    lines = [f"model = {model!r}"]
    code = EXIT_OK
    try:
        report = so.model_verify(model, samples=p["samples"])
    except VerificationFailure as exc:
        report, code = exc.report, EXIT_VIOLATION
    lines += list(report.lines())
    if p["window_lo"] is None and p["window_hi"] is None:
        # half-size window keeps the patch away from asymptotes where e^{-S} blows up
        full = _default_box(model)
        c = 0.5 * (np.array(full.lo) + np.array(full.hi))
        r = 0.25 * (np.array(full.hi) - np.array(full.lo))
        box = so.Box(c - r, c + r)
    else:
        box = _box_from(p, model, "window_lo", "window_hi")
    axes = [np.linspace(lo, hi, max(int(round((hi - lo) / p["h"])), 2) + 1)
            for lo, hi in zip(box.lo, box.hi)]
    if model.n <= 2:
        patch = geo.sample_patch(model.jet, axes)
        jac = geo.jacobi_normal_residual(patch, model.W)
        dh = geo.deltaH_residual(patch, model.W)
        lines.append(f"jacobi_normal_residual = {jac.max_abs():.6e}")
        lines.append(f"deltaH_residual = {float(np.max(np.abs(dh))):.6e}")
        mesh = an.build_weighted_mesh(model, box, p["h"])
        div = an.divergence_identity_check(mesh, mesh.S)
        lines.append(f"divergence_identity(S): lhs = {div.lhs:.10g} rhs = {div.rhs:.10g} "
                     f"residual = {div.residual:.6e}")
        lines.append(f"max |LS + 1| = {float(np.max(np.abs(mesh.LS + 1))):.6e}")
    _emit(cfg, "identity_suite.txt", lines)
    return code


HANDLERS = {
    "flow-run": cmd_flow_run,
    "flow-check": cmd_flow_check,
    "soliton-verify": cmd_soliton_verify,
    "spectrum": cmd_spectrum,
    "volume-growth": cmd_volume_growth,
    "identity-suite": cmd_identity_suite,
}


def dispatch(cfg: RunConfig) -> int:
    return HANDLERS[cfg.command](cfg)


def _apply_threads():
    raw = os.environ.get("TRANSLATOR_LAB_THREADS")
    if not raw:
        return
    try:
        n = int(raw)
        if n < 1:
            raise ValueError
    except ValueError:
        raise _bad("TRANSLATOR_LAB_THREADS",
                          f"TRANSLATOR_LAB_THREADS: expected a positive integer, got {raw!r}") from None
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def build_parser():
    parser = argparse.ArgumentParser(prog="translator-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="TOML file with a flat key table")
        sp.add_argument("--out", help="output directory (default: out)")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one key; VALUE is parsed as TOML")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        _apply_threads()
        cfg = parse_config(args.command, args.config, args.set, args.out)
        return dispatch(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
