"""Experiment configuration: a JSON document layered over the shipped defaults.

The document has five sections (family, innovations, regime, set,
experiment). Every value missing from a user file is taken from
``defaults.json``; unknown keys are rejected so that typos surface early.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError, ConfigurationError
from .model import (
    CoefficientFamily,
    InnovationModel,
    RegimeSpec,
    TargetSet,
    make_coefficients,
    make_innovations,
)

SECTIONS = ("family", "innovations", "regime", "set", "experiment")
RUIN_METHODS = ("auto", "is", "plain")


def load_defaults() -> dict:
    text = resources.files("memrates").joinpath("defaults.json").read_text()
    return json.loads(text)


def _merge(base: dict, extra: dict, where: str) -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        path = f"{where}.{key}" if where else key
        if key not in out:
            raise ConfigError(path, "unknown key")
        # parameter blocks belong to the chosen family or law, so they replace
        if isinstance(out[key], dict) and isinstance(value, dict) and key != "params":
            out[key] = _merge(out[key], value, path)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _parse_override(item: str) -> tuple[list[str], object]:
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise ConfigError(item, "overrides look like section.key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def apply_override(doc: dict, item: str) -> dict:
    keys, value = _parse_override(item)
    patch: dict = {}
    node = patch
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value
    return _merge(doc, patch, "")


def load_config(path=None, overrides=()) -> dict:
    """Defaults, then the file at ``path`` (if any), then ``key=value`` overrides."""
    doc = load_defaults()
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError("--config", f"no such file: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("--config", f"not valid JSON ({exc})") from None
        if not isinstance(user, dict):
            raise ConfigError("--config", "the document must be a JSON object")
        doc = _merge(doc, user, "")
    for item in overrides:
        doc = apply_override(doc, item)
    return doc


@dataclass(frozen=True)
class Experiment:
    """The objects a config describes, built and validated."""

    raw: dict
    family: CoefficientFamily
    model: InnovationModel
    regime: RegimeSpec
    A: TargetSet
    mu: object

    @property
    def settings(self) -> dict:
        return self.raw["experiment"]

    @property
    def seed(self) -> int:
        return int(self.settings["seed"])

    @property
    def threads(self) -> int:
        return int(self.settings["threads"])

    @property
    def lag(self):
        L = self.settings["truncation_lag"]
        return None if L is None else int(L)


def _need(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"{where}.{key}", "missing")
    return section[key]


def _positive_int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value or value < 1:
        raise ConfigError(key, f"expected a positive integer, got {value!r}")
    return int(value)


def _check_experiment(exp: dict) -> None:
    _positive_int(exp["threads"], "experiment.threads")
    if isinstance(exp["seed"], bool) or not isinstance(exp["seed"], int) or exp["seed"] < 0:
        raise ConfigError("experiment.seed", f"expected a non-negative integer, got {exp['seed']!r}")
    if exp["truncation_lag"] is not None:
        _positive_int(exp["truncation_lag"], "experiment.truncation_lag")
    seg = exp["segments"]
    _positive_int(seg["m"], "experiment.segments.m")
    if _positive_int(seg["n_paths"], "experiment.segments.n_paths") < 2:
        raise ConfigError("experiment.segments.n_paths", "need at least two paths")
    if seg["m_grid"] is not None:
        for m in seg["m_grid"]:
            _positive_int(m, "experiment.segments.m_grid")
    ruin = exp["ruin"]
    _positive_int(ruin["n_paths"], "experiment.ruin.n_paths")
    if ruin["method"] not in RUIN_METHODS:
        raise ConfigError("experiment.ruin.method", f"expected one of {RUIN_METHODS}, got {ruin['method']!r}")
    us = ruin["u"]
    if not isinstance(us, list) or not us or any(not isinstance(u, (int, float)) or u <= 0 for u in us):
        raise ConfigError("experiment.ruin.u", "expected a non-empty list of positive numbers")
    if not isinstance(ruin["horizon_factor"], (int, float)) or ruin["horizon_factor"] < 2:
        raise ConfigError("experiment.ruin.horizon_factor", "must be at least 2")


def build(doc: dict) -> Experiment:
    """Turn a merged config document into model objects.

    Model-level validation errors are re-raised as :class:`ConfigError`
    naming the section they came from.
    """
    for name in SECTIONS:
        if not isinstance(doc.get(name), dict):
            raise ConfigError(name, "missing section")
    fam_doc, inn_doc, reg_doc, set_doc = (doc[k] for k in SECTIONS[:4])
    try:
        fam = make_coefficients(_need(fam_doc, "kind", "family"), fam_doc.get("params") or {})
    except ConfigurationError as exc:
        raise ConfigError("family", str(exc)) from None
    try:
        model = make_innovations(_need(inn_doc, "law", "innovations"), inn_doc.get("params") or {})
    except (ConfigurationError, TypeError, ValueError) as exc:
        raise ConfigError("innovations", str(exc)) from None
    try:
        beta = reg_doc.get("beta")
        reg = RegimeSpec(
            str(_need(reg_doc, "tag", "regime")),
            omega=float(reg_doc.get("omega", 1.0)),
            a_scale=float(reg_doc.get("a_scale", 1.0)),
            beta=None if beta is None else float(beta),
            family=fam,
        )
    except ConfigurationError as exc:
        raise ConfigError("regime", str(exc)) from None
    try:
        direction = [float(x) for x in _need(set_doc, "direction", "set")]
        A = TargetSet.half_space(direction, float(_need(set_doc, "threshold", "set")), bool(set_doc.get("closed", False)))
    except ConfigurationError as exc:
        raise ConfigError("set", str(exc)) from None
    if A.dim != model.dim:
        raise ConfigError("set.direction", f"has dimension {A.dim} but the innovations have dimension {model.dim}")
    exp = doc["experiment"]
    _check_experiment(exp)
    mu = exp["mu"]
    if isinstance(mu, list):
        if len(mu) != model.dim:
            raise ConfigError("experiment.mu", f"expected {model.dim} components")
        mu = [float(x) for x in mu]
    elif isinstance(mu, (int, float)) and not isinstance(mu, bool):
        mu = float(mu) if model.dim == 1 else [float(mu)] * model.dim
    else:
        raise ConfigError("experiment.mu", f"expected a number or a list, got {mu!r}")
    return Experiment(doc, fam, model, reg, A, mu)
