"""Command-line front end.

Model specifications arrive as strict JSON documents (unknown keys rejected,
all numbers finite); grids go out as CSV, scalar results as a JSON envelope.
Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import mcoracle, measurechange, signedexp
from .numkernel import NumericalError
from .levycalc import (
    AtomJumps,
    AtomLaw,
    GaussianJumps,
    GaussianLaw,
    LevyTriplet,
    PredictableJumpSchedule,
    RepresentingFunction,
    Truncation,
    affine,
    exp_return,
    expected_exp_utility,
    exponential,
    identity,
    indicator_at_minus_one,
    levy_khintchin,
    log1p_entry,
    modulus_entry,
    modulus_of,
    modulus_power,
    mult_compensator,
    signed_power,
    yor_product,
)
from .signedexp import GridSpec, MVParams, SignedMellinModel
from .mcoracle import SimConfig

__all__ = ["main", "ModelSpec", "SpecError"]


class SpecError(ValueError):
    """The model specification violates the schema."""


# ---------------------------------------------------------------------------
# Spec parsing
# ---------------------------------------------------------------------------


def _reject_extra(d: dict, allowed: set, where: str):
    extra = set(d) - allowed
    if extra:
        raise SpecError(f"unknown keys {sorted(extra)} in {where}")


def _num(d: dict, key: str, where: str, default=None) -> float:
    if key not in d:
        if default is None:
            raise SpecError(f"missing {key!r} in {where}")
        return float(default)
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SpecError(f"{where}.{key} must be a number")
    if not math.isfinite(v):
        raise SpecError(f"{where}.{key} must be finite")
    return float(v)


def _int(d: dict, key: str, where: str, default=None) -> int:
    v = _num(d, key, where, default)
    if v != int(v):
        raise SpecError(f"{where}.{key} must be an integer")
    return int(v)


def _parse_jump_measure(d, where: str):
    if not isinstance(d, dict):
        raise SpecError(f"{where} must be an object")
    kind = d.get("type")
    if kind == "none":
        _reject_extra(d, {"type"}, where)
        return AtomJumps(())
    if kind == "gaussian_cpp":
        _reject_extra(d, {"type", "intensity", "mean", "var"}, where)
        return GaussianJumps(_num(d, "intensity", where),
                             _num(d, "mean", where, 0.0),
                             _num(d, "var", where))
    if kind == "atoms":
        _reject_extra(d, {"type", "atoms"}, where)
        atoms = d.get("atoms")
        if not isinstance(atoms, list):
            raise SpecError(f"{where}.atoms must be a list of [size, intensity]")
        pairs = []
        for i, pair in enumerate(atoms):
            if not (isinstance(pair, list) and len(pair) == 2):
                raise SpecError(f"{where}.atoms[{i}] must be [size, intensity]")
            pairs.append((float(pair[0]), float(pair[1])))
        return AtomJumps(tuple(pairs))
    raise SpecError(f"{where}.type must be gaussian_cpp, atoms or none")


def _parse_law(d, where: str):
    if not isinstance(d, dict):
        raise SpecError(f"{where} must be an object")
    kind = d.get("type")
    if kind == "gaussian":
        _reject_extra(d, {"type", "mean", "var"}, where)
        return GaussianLaw(_num(d, "mean", where, 0.0), _num(d, "var", where))
    if kind == "atoms":
        _reject_extra(d, {"type", "atoms"}, where)
        atoms = d.get("atoms")
        if not isinstance(atoms, list):
            raise SpecError(f"{where}.atoms must be a list of [size, prob]")
        try:
            return AtomLaw(tuple((float(s), float(p)) for s, p in atoms))
        except (TypeError, ValueError) as exc:
            raise SpecError(f"bad atoms in {where}: {exc}") from exc
    raise SpecError(f"{where}.type must be gaussian or atoms")


def _parse_truncation(d, where: str) -> Truncation:
    if d is None:
        return Truncation.zero()
    if not isinstance(d, dict):
        raise SpecError(f"{where} must be an object")
    _reject_extra(d, {"type", "cutoff"}, where)
    kind = d.get("type")
    if kind not in ("zero", "identity", "bounded"):
        raise SpecError(f"{where}.type must be zero, identity or bounded")
    if kind == "bounded":
        return Truncation.bounded(_num(d, "cutoff", where, 1.0))
    return Truncation(kind)


_CATALOG = {
    "identity": ((), identity),
    "affine": (("zeta",), affine),
    "exp_return": (("a",), exp_return),
    "exponential": (("zeta",), exponential),
    "log1p": ((), log1p_entry),
    "modulus_power": (("alpha",), modulus_power),
    "signed_power": (("alpha",), signed_power),
    "indicator_minus_one": ((), indicator_at_minus_one),
    "modulus": ((), modulus_entry),
}


def _parse_representation(d, where: str) -> RepresentingFunction:
    if not isinstance(d, dict):
        raise SpecError(f"{where} must be an object")
    rid = d.get("id")
    if rid not in _CATALOG:
        raise SpecError(f"{where}.id must be one of {sorted(_CATALOG)}")
    params, ctor = _CATALOG[rid]
    _reject_extra(d, {"id", *params}, where)
    args = [_num(d, p, where) for p in params]
    return ctor(*args)


@dataclass
class ModelSpec:
    """Validated model specification plus constructed domain objects."""

    triplet: LevyTriplet
    schedule: PredictableJumpSchedule | None
    horizon: float
    rep: RepresentingFunction | None
    tilt_entry: RepresentingFunction | None
    grids: GridSpec
    sim: SimConfig
    utility: dict | None
    raw: dict

    @property
    def input_hash(self) -> str:
        digest = hashlib.sha256(
            json.dumps(self.raw, sort_keys=True).encode("utf8")).hexdigest()
        return digest[:16]


def parse_model_spec(doc: dict) -> ModelSpec:
    if not isinstance(doc, dict):
        raise SpecError("spec must be a JSON object")
    _reject_extra(doc, {"levy", "schedule", "representation", "tilt",
                        "horizon", "grids", "sim", "utility"}, "spec")

    levy = doc.get("levy")
    if not isinstance(levy, dict):
        raise SpecError("spec.levy is required")
    _reject_extra(levy, {"mu", "sigma", "jump", "truncation"}, "levy")
    sigma = _num(levy, "sigma", "levy", 0.0)
    if sigma < 0:
        raise SpecError("levy.sigma must be non-negative")
    jumps = _parse_jump_measure(levy.get("jump", {"type": "none"}), "levy.jump")
    trunc = _parse_truncation(levy.get("truncation"), "levy.truncation")
    triplet = LevyTriplet(_num(levy, "mu", "levy", 0.0), sigma * sigma, jumps, trunc)

    schedule = None
    if "schedule" in doc:
        if not isinstance(doc["schedule"], list):
            raise SpecError("spec.schedule must be a list")
        entries = []
        for i, ent in enumerate(doc["schedule"]):
            where = f"schedule[{i}]"
            if not isinstance(ent, dict):
                raise SpecError(f"{where} must be an object")
            _reject_extra(ent, {"time", "law"}, where)
            entries.append((_num(ent, "time", where),
                            _parse_law(ent.get("law"), f"{where}.law")))
        try:
            schedule = PredictableJumpSchedule(tuple(entries))
        except ValueError as exc:
            raise SpecError(str(exc)) from exc

    horizon = _num(doc, "horizon", "spec", 1.0)
    if not horizon > 0:
        raise SpecError("horizon must be positive")

    rep = (_parse_representation(doc["representation"], "representation")
           if "representation" in doc else None)
    tilt = (_parse_representation(doc["tilt"], "tilt")
            if "tilt" in doc else None)

    gd = doc.get("grids", {})
    if not isinstance(gd, dict):
        raise SpecError("spec.grids must be an object")
    _reject_extra(gd, {"x_min", "x_max", "n", "U", "n_u"}, "grids")
    try:
        grids = GridSpec(
            _num(gd, "x_min", "grids", -16.0), _num(gd, "x_max", "grids", 3.0),
            _int(gd, "n", "grids", 2048), _num(gd, "U", "grids", 200.0),
            _int(gd, "n_u", "grids", 2**14))
    except ValueError as exc:
        raise SpecError(str(exc)) from exc

    sd = doc.get("sim", {})
    if not isinstance(sd, dict):
        raise SpecError("spec.sim must be an object")
    _reject_extra(sd, {"n_paths", "seed", "antithetic"}, "sim")
    anti = sd.get("antithetic", False)
    if not isinstance(anti, bool):
        raise SpecError("sim.antithetic must be a boolean")
    try:
        sim = SimConfig(_int(sd, "n_paths", "sim", 100_000),
                        _int(sd, "seed", "sim", 1), horizon, anti)
    except ValueError as exc:
        raise SpecError(str(exc)) from exc

    utility = None
    if "utility" in doc:
        ud = doc["utility"]
        if not isinstance(ud, dict):
            raise SpecError("spec.utility must be an object")
        _reject_extra(ud, {"lambda_continuous", "lambda_scheduled",
                           "theta", "law"}, "utility")
        utility = {
            "lambda_continuous": _num(ud, "lambda_continuous", "utility"),
            "lambda_scheduled": _num(ud, "lambda_scheduled", "utility"),
            "theta": _num(ud, "theta", "utility"),
            "law": _parse_law(ud.get("law"), "utility.law"),
        }

    return ModelSpec(triplet, schedule, horizon, rep, tilt, grids, sim,
                     utility, doc)


def load_spec(path: str) -> ModelSpec:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SpecError(f"cannot read spec file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(f"spec is not valid JSON: {exc}") from exc
    return parse_model_spec(doc)


# ---------------------------------------------------------------------------
# Envelopes and emission
# ---------------------------------------------------------------------------


@dataclass
class ResultEnvelope:
    command: str
    input_hash: str
    outputs: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "input_hash": self.input_hash,
            "outputs": self.outputs,
            "diagnostics": self.diagnostics,
            "files": self.files,
        }


def _scalar(value, tol=None, se=None) -> dict:
    z = complex(value)
    out = {"re": z.real, "im": z.imag}
    if tol is not None:
        out["tol"] = tol
    if se is not None:
        out["se"] = se
    return out


def _write_csv(out_dir: str | None, name: str, header: list, rows) -> list:
    if out_dir is None:
        return []
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    target = path / name
    with open(target, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    return [str(target)]


def _emit(env: ResultEnvelope, args) -> None:
    if args.json:
        json.dump(env.to_json(), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
        return
    print(f"[{env.command}] input {env.input_hash}")
    for key, val in env.outputs.items():
        print(f"  {key}: {val}")
    for f in env.files:
        print(f"  wrote {f}")


QUAD_TOL = 1e-10  # reporting tolerance of quadrature-backed scalars


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _u_list(args) -> np.ndarray:
    if args.u:
        try:
            return np.array([float(tok) for tok in args.u.split(",")])
        except ValueError as exc:
            raise SpecError(f"bad --u list: {exc}") from exc
    return np.linspace(args.u_min, args.u_max, args.u_n)


def cmd_charfn(args) -> ResultEnvelope:
    spec = load_spec(args.spec)
    us = _u_list(args)
    rows = []
    for u in us:
        val = levy_khintchin(float(u), spec.triplet, spec.schedule, spec.horizon)
        rows.append((u, val.real, val.imag))
    env = ResultEnvelope("charfn", spec.input_hash)
    env.files = _write_csv(args.out, "charfn.csv", ["u", "re", "im"], rows)
    env.outputs["points"] = len(rows)
    env.outputs["phi_at_first_u"] = _scalar(complex(rows[0][1], rows[0][2]),
                                            tol=QUAD_TOL)
    env.diagnostics["u_range"] = [float(us.min()), float(us.max())]
    if not args.json and args.out is None:
        for u, re, im in rows:
            print(f"  u={u:g}: {re:+.12f} {im:+.12f}i")
    return env


def _require_rep(spec: ModelSpec) -> RepresentingFunction:
    if spec.rep is None:
        raise SpecError("this command needs a 'representation' section")
    return spec.rep


def _mellin_model(spec: ModelSpec) -> SignedMellinModel:
    return SignedMellinModel(spec.triplet, _require_rep(spec), spec.schedule,
                             spec.horizon)


def cmd_mellin(args) -> ResultEnvelope:
    spec = load_spec(args.spec)
    model = _mellin_model(spec)
    us = _u_list(args)
    gp0 = signedexp.g_plus(model, 0.0).real
    gm0 = signedexp.g_minus(model, 0.0).real
    rows = []
    for u in us:
        gp = signedexp.g_plus(model, 1j * float(u))
        gm = signedexp.g_minus(model, 1j * float(u))
        pp = gp / gp0 if gp0 > 1e-14 else complex("nan")
        pm = gm / gm0 if gm0 > 1e-14 else complex("nan")
        rows.append((u, gp.real, gp.imag, gm.real, gm.imag,
                     pp.real, pp.imag, pm.real, pm.imag))
    env = ResultEnvelope("mellin", spec.input_hash)
    env.outputs["g_plus_0"] = _scalar(gp0, tol=QUAD_TOL)
    env.outputs["g_minus_0"] = _scalar(gm0, tol=QUAD_TOL)
    env.files = _write_csv(
        args.out, "mellin.csv",
        ["u", "gplus_re", "gplus_im", "gminus_re", "gminus_im",
         "phiplus_re", "phiplus_im", "phiminus_re", "phiminus_im"], rows)
    return env


def _density_rows(grid) -> list:
    return list(zip(grid.x.tolist(), grid.p.tolist()))


def cmd_density(args) -> ResultEnvelope:
    spec = load_spec(args.spec)
    model = _mellin_model(spec)
    neg, pos = signedexp.subdensities(model, spec.grids)
    wealth = signedexp.terminal_wealth_density(model, spec.grids)
    env = ResultEnvelope("density", spec.input_hash)
    env.files += _write_csv(args.out, "fig1_negative_part.csv",
                            ["log_modulus", "negative_part_subdensity"],
                            _density_rows(neg))
    env.files += _write_csv(args.out, "fig1_positive_part.csv",
                            ["log_modulus", "positive_part_subdensity"],
                            _density_rows(pos))
    env.files += _write_csv(args.out, "fig2_terminal_wealth.csv",
                            ["wealth", "terminal_wealth_density"],
                            _density_rows(wealth))
    env.outputs["negative_mass"] = _scalar(neg.mass, tol=1e-3)
    env.outputs["positive_mass"] = _scalar(pos.mass, tol=1e-3)
    env.outputs["wealth_mass"] = _scalar(wealth.mass, tol=1e-3)
    env.diagnostics["imag_residue"] = max(neg.imag_residue, pos.imag_residue)
    return env


def cmd_mv_demo(args) -> ResultEnvelope:
    """Full mean-variance case study with the built-in parameter set."""
    params = MVParams(mu=0.2, sigma=0.2, lam=1.0, gamma=0.1, T=1.0)
    raw = {"levy": {"mu": 0.2, "sigma": 0.2,
                    "jump": {"type": "gaussian_cpp", "intensity": 1.0,
                             "mean": 0.0, "var": 0.01}},
           "horizon": 1.0}
    a = signedexp.mv_optimal_fraction(params)
    model = SignedMellinModel.from_mv(params)
    gm0 = signedexp.g_minus(model, 0.0).real
    env = ResultEnvelope(
        "mv-demo",
        hashlib.sha256(json.dumps(raw, sort_keys=True).encode()).hexdigest()[:16],
    )
    env.outputs["optimal_fraction"] = _scalar(a, tol=1e-10)
    env.outputs["negative_sign_probability"] = _scalar(gm0, tol=QUAD_TOL)
    if args.out is not None:
        neg, pos = signedexp.subdensities(model)
        wealth = signedexp.terminal_wealth_density(model)
        env.files += _write_csv(args.out, "fig1_negative_part.csv",
                                ["log_modulus", "negative_part_subdensity"],
                                _density_rows(neg))
        env.files += _write_csv(args.out, "fig1_positive_part.csv",
                                ["log_modulus", "positive_part_subdensity"],
                                _density_rows(pos))
        env.files += _write_csv(args.out, "fig2_terminal_wealth.csv",
                                ["wealth", "terminal_wealth_density"],
                                _density_rows(wealth))
        env.outputs["negative_mass"] = _scalar(neg.mass, tol=1e-3)
        env.outputs["positive_mass"] = _scalar(pos.mass, tol=1e-3)
        env.outputs["wealth_mass"] = _scalar(wealth.mass, tol=1e-3)
    if not args.json:
        print(f"optimal fraction a = {a:.6f}")
        print(f"negative sign probability g-(0) = {gm0:.6f}")
    return env


def cmd_utility(args) -> ResultEnvelope:
    spec = load_spec(args.spec)
    if spec.utility is None:
        raise SpecError("the utility command needs a 'utility' section")
    u = spec.utility
    value = expected_exp_utility(
        u["lambda_continuous"], u["lambda_scheduled"],
        spec.triplet.b, spec.triplet.sigma2, spec.triplet.jumps,
        u["theta"], u["law"], spec.horizon)
    env = ResultEnvelope("utility", spec.input_hash)
    env.outputs["expected_utility"] = _scalar(value, tol=QUAD_TOL)
    return env


def _require_tilt(spec: ModelSpec) -> measurechange.GirsanovTilt:
    if spec.tilt_entry is None:
        raise SpecError("this command needs a 'tilt' section")
    return measurechange.GirsanovTilt(spec.tilt_entry, spec.triplet,
                                      spec.schedule)


def cmd_girsanov(args) -> ResultEnvelope:
    spec = load_spec(args.spec)
    tilt = _require_tilt(spec)
    rep = spec.rep if spec.rep is not None else identity()
    qc = measurechange.q_characteristics(rep, tilt)
    env = ResultEnvelope("girsanov", spec.input_hash)
    from .levycalc import jump_total

    env.outputs["q_drift_rate"] = _scalar(qc.drift_rate, tol=QUAD_TOL)
    env.outputs["q_diffusion"] = _scalar(qc.diffusion, tol=QUAD_TOL)
    env.outputs["q_jump_intensity"] = _scalar(jump_total(qc.q_jumps),
                                              tol=QUAD_TOL)
    env.outputs["q_schedule"] = [
        {"time": tau, "normalizer": law.normalizer,
         "drift_increment": _scalar(inc, tol=QUAD_TOL)}
        for tau, law, inc in qc.q_schedule
    ]
    env.outputs["q_expected_stoch_exp"] = _scalar(
        measurechange.q_expected_stoch_exp(rep, tilt, spec.horizon),
        tol=QUAD_TOL)
    return env


def cmd_simulate(args) -> ResultEnvelope:
    spec = load_spec(args.spec)
    rep = _require_rep(spec)
    cfg = _sim_config(spec, args)
    batch = mcoracle.simulate(spec.triplet, spec.schedule, cfg)
    values = mcoracle.stoch_exp_terminal(rep, spec.triplet, batch)
    mean, se = mcoracle.estimate(values)
    env = ResultEnvelope("simulate", spec.input_hash)
    env.outputs["mean"] = _scalar(mean, se=se)
    env.outputs["n_paths"] = cfg.n_paths
    env.outputs["seed"] = cfg.seed
    rows = [(i, v.real, v.imag) for i, v in enumerate(values)]
    env.files = _write_csv(args.out, "paths.csv",
                           ["path_id", "value_re", "value_im"], rows)
    return env


def _sim_config(spec: ModelSpec, args) -> SimConfig:
    n = args.paths if args.paths is not None else spec.sim.n_paths
    seed = args.seed if args.seed is not None else spec.sim.seed
    return SimConfig(n, seed, spec.horizon, spec.sim.antithetic)


# ---------------------------------------------------------------------------
# Verification suites
# ---------------------------------------------------------------------------


def _suite_yor(spec: ModelSpec, cfg: SimConfig) -> list:
    rep = _require_rep(spec)
    other = exponential(0.5)
    combined = yor_product(rep, other)
    batch = mcoracle.simulate(spec.triplet, spec.schedule,
                              SimConfig(min(cfg.n_paths, 1000), cfg.seed,
                                        cfg.horizon))
    va = mcoracle.stoch_exp_terminal(rep, spec.triplet, batch)
    vb = mcoracle.stoch_exp_terminal(other, spec.triplet, batch)
    vab = mcoracle.stoch_exp_terminal(combined, spec.triplet, batch)
    rel_prod = np.max(np.abs(va * vb - vab) / (1.0 + np.abs(vab)))
    vm = mcoracle.stoch_exp_terminal(modulus_of(rep), spec.triplet, batch)
    rel_mod = np.max(np.abs(np.abs(va) - vm) / (1.0 + np.abs(vm)))
    return [
        ("yor_product_identity", float(rel_prod), 1e-10, rel_prod <= 1e-10),
        ("modulus_identity", float(rel_mod), 1e-10, rel_mod <= 1e-10),
    ]


def _suite_pii_mean(spec: ModelSpec, cfg: SimConfig) -> list:
    rep = _require_rep(spec)
    batch = mcoracle.simulate(spec.triplet, spec.schedule, cfg)
    values = mcoracle.stoch_exp_terminal(rep, spec.triplet, batch)
    mean, se = mcoracle.estimate(values)
    from .levycalc import expected_stoch_exp

    target = expected_stoch_exp(rep, spec.triplet, spec.schedule, cfg.horizon)
    gap = abs(complex(mean) - target)
    return [("pii_mean_within_3se", float(gap), 3.0 * se, gap <= 3.0 * se)]


def _suite_martingale(spec: ModelSpec, cfg: SimConfig) -> list:
    rep = _require_rep(spec)
    checks = []
    for frac in (0.25, 0.5, 1.0):
        t = frac * cfg.horizon
        sub = SimConfig(cfg.n_paths, cfg.seed, t, cfg.antithetic)
        batch = mcoracle.simulate(spec.triplet, spec.schedule, sub)
        values = mcoracle.stoch_exp_terminal(rep, spec.triplet, batch)
        comp = mult_compensator(rep, spec.triplet, spec.schedule, t)
        mean, se = mcoracle.estimate(values / comp)
        gap = abs(complex(mean) - 1.0)
        checks.append((f"martingale_surrogate_t={t:g}", float(gap),
                       3.0 * se, gap <= 3.0 * se))
    return checks


def _suite_importance(spec: ModelSpec, cfg: SimConfig) -> list:
    tilt = _require_tilt(spec)
    rep = spec.rep if spec.rep is not None else identity()
    functional = lambda batch: mcoracle.stoch_exp_terminal(
        rep, spec.triplet, batch)
    res = mcoracle.importance_weighted(tilt, functional, cfg)
    target = measurechange.q_expected_stoch_exp(rep, tilt, cfg.horizon)
    gap = abs(complex(res.mean) - target)
    wgap = abs(res.weight_mean - 1.0)
    return [
        ("importance_vs_formula", float(gap), 3.0 * res.se, gap <= 3.0 * res.se),
        ("weight_mean_is_one", float(wgap), 3.0 * res.weight_se,
         wgap <= 3.0 * res.weight_se),
    ]


_SUITES = {
    "yor": _suite_yor,
    "pii-mean": _suite_pii_mean,
    "martingale": _suite_martingale,
    "importance": _suite_importance,
}


def cmd_verify(args) -> ResultEnvelope:
    spec = load_spec(args.spec)
    if args.suite not in _SUITES:
        raise SpecError(f"unknown suite {args.suite!r}; "
                        f"choose from {sorted(_SUITES)}")
    cfg = _sim_config(spec, args)
    checks = _SUITES[args.suite](spec, cfg)
    env = ResultEnvelope(f"verify:{args.suite}", spec.input_hash)
    all_ok = True
    for name, value, bound, ok in checks:
        env.outputs[name] = {"value": value, "bound": bound,
                             "pass": bool(ok)}
        all_ok = all_ok and ok
        if not args.json:
            print(f"  {'PASS' if ok else 'FAIL'} {name}: "
                  f"{value:.3e} vs bound {bound:.3e}")
    env.diagnostics["all_pass"] = bool(all_ok)
    if not all_ok:
        raise NumericalError(f"suite {args.suite} failed")
    return env


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stochexp",
        description="Compensator calculus and Monte Carlo checks for "
                    "stochastic exponentials of jump diffusions.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_spec=True):
        if needs_spec:
            p.add_argument("--spec", required=True, help="model spec JSON file")
        p.add_argument("--out", default=None, help="directory for CSV output")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--paths", type=int, default=None)
        p.add_argument("--json", action="store_true",
                       help="print the result envelope as JSON")

    p = sub.add_parser("charfn", help="characteristic function on a u grid")
    common(p)
    p.add_argument("--u", default=None, help="comma-separated u values")
    p.add_argument("--u-min", type=float, default=-20.0)
    p.add_argument("--u-max", type=float, default=20.0)
    p.add_argument("--u-n", type=int, default=101)
    p.set_defaults(fn=cmd_charfn)

    p = sub.add_parser("mellin", help="sign-split power transforms g+/g-")
    common(p)
    p.add_argument("--u", default=None, help="imaginary parts of alpha")
    p.add_argument("--u-min", type=float, default=-10.0)
    p.add_argument("--u-max", type=float, default=10.0)
    p.add_argument("--u-n", type=int, default=21)
    p.set_defaults(fn=cmd_mellin)

    p = sub.add_parser("density", help="subdensities and wealth density CSVs")
    common(p)
    p.set_defaults(fn=cmd_density)

    p = sub.add_parser("mv-demo", help="mean-variance case study")
    common(p, needs_spec=False)
    p.set_defaults(fn=cmd_mv_demo)

    p = sub.add_parser("utility", help="expected exponential utility")
    common(p)
    p.set_defaults(fn=cmd_utility)

    p = sub.add_parser("girsanov", help="tilted characteristics as JSON")
    common(p)
    p.set_defaults(fn=cmd_girsanov)

    p = sub.add_parser("simulate", help="pathwise stochastic exponentials")
    common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("verify", help="run a named verification suite")
    common(p)
    p.add_argument("--suite", required=True,
                   help=f"one of {sorted(_SUITES)}")
    p.set_defaults(fn=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        env = args.fn(args)
    except SpecError as exc:
        json.dump({"error": "invalid_input", "reason": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except (ValueError, TypeError) as exc:
        json.dump({"error": "invalid_input", "reason": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except NumericalError as exc:
        json.dump({"error": "numerical_failure", "reason": str(exc)},
                  sys.stderr)
        sys.stderr.write("\n")
        return 3
    _emit(env, args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
