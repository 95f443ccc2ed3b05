"""Run configuration: a single JSON document, strictly validated.

Unknown keys are rejected and every parse error names the offending field
path (e.g. ``krylov.tol: expected a positive number``), so a typo in a
config file fails loudly instead of silently running defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .perfmodel import ModelParams
from .problems import ProblemSpec
from .smooth import SmootherSpec
from .solve import AdaptiveSpec, KrylovSpec

VARIANTS = ("galerkin", "sparse", "hybrid", "nongalerkin")


class ConfigError(ValueError):
    """A config document failed validation; message carries the field path."""


_MISSING = object()


def _check_keys(d: dict, path: str, allowed) -> None:
    for k in d:
        if k not in allowed:
            raise ConfigError(f"{path}{k}: unknown key (allowed: {', '.join(sorted(allowed))})")


def _get(d: dict, path: str, key: str, types, default=_MISSING, names: str = ""):
    if key not in d:
        if default is _MISSING:
            raise ConfigError(f"{path}{key}: required")
        return default
    v = d[key]
    if isinstance(v, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        raise ConfigError(f"{path}{key}: expected {names}, got a boolean")
    if not isinstance(v, types):
        raise ConfigError(f"{path}{key}: expected {names}, got {type(v).__name__}")
    return v


def _section(doc: dict, key: str, allowed) -> dict:
    sec = doc.get(key, {})
    if sec is None:
        sec = {}
    if not isinstance(sec, dict):
        raise ConfigError(f"{key}: expected an object")
    _check_keys(sec, f"{key}.", allowed)
    return sec


def _build(where: str, factory, **kwargs):
    try:
        return factory(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


@dataclass(frozen=True)
class RunConfig:
    """Everything one solver run needs, resolved and validated."""

    problem: ProblemSpec
    variant: str = "galerkin"
    lumping: str = "diagonal"
    gammas: tuple = ()
    max_size: int = 300
    strength_theta: float = 0.25
    max_row_elems: int | None = None
    smoother: SmootherSpec = SmootherSpec()
    krylov: KrylovSpec = KrylovSpec()
    adaptive: AdaptiveSpec | None = None
    model: ModelParams = ModelParams()
    calibrate: bool = False
    seed: int = 0
    out: str = "out"

    def to_json_dict(self) -> dict:
        p = self.problem
        problem = {
            "kind": p.kind,
            "dims": list(p.dims),
            "theta": p.theta,
            "epsilon": p.epsilon,
        }
        if p.path is not None:
            problem["path"] = p.path
        setup = {"max_size": self.max_size, "strength_theta": self.strength_theta}
        if self.max_row_elems is not None:
            setup["max_row_elems"] = self.max_row_elems
        doc = {
            "problem": problem,
            "method": {"variant": self.variant, "lumping": self.lumping},
            "gammas": list(self.gammas),
            "setup": setup,
            "smoother": {
                "kind": self.smoother.kind,
                "sweeps": self.smoother.sweeps,
                "weight": self.smoother.weight,
            },
            "krylov": {
                "method": self.krylov.method,
                "tol": self.krylov.tol,
                "max_iter": self.krylov.max_iter,
                "restart": self.krylov.restart,
            },
            "adaptive": None
            if self.adaptive is None
            else {
                "k": self.adaptive.k,
                "s": self.adaptive.s,
                "gamma_min": self.adaptive.gamma_min,
                "trigger": self.adaptive.trigger,
                "rho_max": self.adaptive.rho_max,
            },
            "model": {
                "alpha": self.model.alpha,
                "beta": self.model.beta,
                "c": self.model.c,
                "p": self.model.p,
                "beta_unit": self.model.beta_unit,
                "calibrate": self.calibrate,
            },
            "seed": self.seed,
            "out": self.out,
        }
        return doc


TOP_KEYS = (
    "problem",
    "method",
    "gammas",
    "setup",
    "smoother",
    "krylov",
    "adaptive",
    "model",
    "seed",
    "out",
)


def parse_config(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config: expected a JSON object at the top level")
    _check_keys(doc, "", TOP_KEYS)

    prob = _section(doc, "problem", ("kind", "dims", "n", "theta", "epsilon", "path"))
    kind = _get(prob, "problem.", "kind", str, names="a string")
    if "dims" in prob and "n" in prob:
        raise ConfigError("problem.n: give either dims or n, not both")
    if "dims" in prob:
        raw = _get(prob, "problem.", "dims", list, names="a list of ints")
        dims = tuple(int(_get({"d": d}, "problem.dims.", "d", int, names="an integer")) for d in raw)
    else:
        n = _get(prob, "problem.", "n", int, default=None, names="an integer")
        if n is None:
            dims = ()
        else:
            dims = (n, n) if kind == "aniso2d_9pt" else (n, n, n)
    problem = _build(
        "problem",
        ProblemSpec,
        kind=kind,
        dims=dims,
        theta=float(_get(prob, "problem.", "theta", (int, float), default=0.0, names="a number")),
        epsilon=float(_get(prob, "problem.", "epsilon", (int, float), default=1.0, names="a number")),
        path=_get(prob, "problem.", "path", str, default=None, names="a string"),
    )

    meth = _section(doc, "method", ("variant", "lumping"))
    variant = _get(meth, "method.", "variant", str, default="galerkin", names="a string")
    if variant not in VARIANTS:
        raise ConfigError(f"method.variant: expected one of {VARIANTS}, got {variant!r}")
    default_lumping = "neighbors" if variant == "nongalerkin" else "diagonal"
    lumping = _get(meth, "method.", "lumping", str, default=default_lumping, names="a string")
    if lumping not in ("neighbors", "diagonal"):
        raise ConfigError(f"method.lumping: expected neighbors or diagonal, got {lumping!r}")

    raw_g = doc.get("gammas", [])
    if not isinstance(raw_g, list):
        raise ConfigError("gammas: expected a list of numbers")
    gammas = []
    for i, g in enumerate(raw_g):
        if isinstance(g, bool) or not isinstance(g, (int, float)):
            raise ConfigError(f"gammas[{i}]: expected a number")
        if not 0.0 <= float(g) <= 1.0:
            raise ConfigError(f"gammas[{i}]: drop tolerances lie in [0,1], got {g}")
        gammas.append(float(g))

    setup = _section(doc, "setup", ("max_size", "strength_theta", "max_row_elems"))
    max_size = _get(setup, "setup.", "max_size", int, default=300, names="an integer")
    if max_size < 1:
        raise ConfigError("setup.max_size: expected a positive integer")
    strength_theta = float(
        _get(setup, "setup.", "strength_theta", (int, float), default=0.25, names="a number")
    )
    if not 0.0 <= strength_theta <= 1.0:
        raise ConfigError("setup.strength_theta: expected a value in [0,1]")
    max_row_elems = _get(setup, "setup.", "max_row_elems", int, default=None, names="an integer")
    if max_row_elems is not None and max_row_elems < 1:
        raise ConfigError("setup.max_row_elems: expected a positive integer")

    smoo = _section(doc, "smoother", ("kind", "sweeps", "weight"))
    smoother = _build(
        "smoother",
        SmootherSpec,
        kind=_get(smoo, "smoother.", "kind", str, default="gauss_seidel_sym", names="a string"),
        sweeps=_get(smoo, "smoother.", "sweeps", int, default=1, names="an integer"),
        weight=float(
            _get(smoo, "smoother.", "weight", (int, float), default=2.0 / 3.0, names="a number")
        ),
    )

    kry = _section(doc, "krylov", ("method", "tol", "max_iter", "restart"))
    krylov = _build(
        "krylov",
        KrylovSpec,
        method=_get(kry, "krylov.", "method", str, default="pcg", names="a string"),
        tol=float(_get(kry, "krylov.", "tol", (int, float), default=1e-8, names="a number")),
        max_iter=_get(kry, "krylov.", "max_iter", int, default=500, names="an integer"),
        restart=_get(kry, "krylov.", "restart", int, default=50, names="an integer"),
    )

    adaptive = None
    if doc.get("adaptive") is not None:
        ad = _section(doc, "adaptive", ("k", "s", "gamma_min", "trigger", "rho_max"))
        adaptive = _build(
            "adaptive",
            AdaptiveSpec,
            k=_get(ad, "adaptive.", "k", int, default=3, names="an integer"),
            s=_get(ad, "adaptive.", "s", int, default=1, names="an integer"),
            gamma_min=float(
                _get(ad, "adaptive.", "gamma_min", (int, float), default=0.01, names="a number")
            ),
            trigger=_get(ad, "adaptive.", "trigger", str, default="conv_factor", names="a string"),
            rho_max=float(
                _get(ad, "adaptive.", "rho_max", (int, float), default=0.9, names="a number")
            ),
        )

    mod = _section(doc, "model", ("alpha", "beta", "c", "p", "beta_unit", "calibrate"))
    calibrate = _get(mod, "model.", "calibrate", bool, default=False, names="a boolean")
    model = _build(
        "model",
        ModelParams,
        alpha=float(_get(mod, "model.", "alpha", (int, float), default=1.8e-6, names="a number")),
        beta=float(_get(mod, "model.", "beta", (int, float), default=1.8e-9, names="a number")),
        c=float(_get(mod, "model.", "c", (int, float), default=1e-10, names="a number")),
        p=_get(mod, "model.", "p", int, default=1, names="an integer"),
        beta_unit=_get(mod, "model.", "beta_unit", str, default="word", names="a string"),
    )

    seed = _get(doc, "", "seed", int, default=0, names="an integer")
    out = _get(doc, "", "out", str, default="out", names="a string")

    return RunConfig(
        problem=problem,
        variant=variant,
        lumping=lumping,
        gammas=tuple(gammas),
        max_size=max_size,
        strength_theta=strength_theta,
        max_row_elems=max_row_elems,
        smoother=smoother,
        krylov=krylov,
        adaptive=adaptive,
        model=model,
        calibrate=calibrate,
        seed=seed,
        out=out,
    )


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc})") from exc
    return parse_config(doc)
