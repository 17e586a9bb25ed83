"""YAML experiment configuration.

Numbers may be written as decimals or as exact fractions ``"a/b"``;
fractions are parsed to the nearest double and their source text is kept
in :attr:`ExperimentConfig.fractions` for the run manifest.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import Any, Optional

import yaml

from .bounds import InequalityGridSpec
from .decision import LossSpec, PeriodicMask
from .evaluate import DEFAULT_EXACT_CAP
from .exceptions import ConfigError
from .games import GameSpec
from .measures import BernoulliIID, DeterministicSeq, MarkovBinary, Measure
from .mixture import ModelClass

__all__ = ["ExperimentConfig", "load_config", "parse_config", "parse_measure"]

_KINDS = {
    "bernoulli": "bernoulli",
    "bernoulliiid": "bernoulli",
    "markov": "markov",
    "markovbinary": "markov",
    "deterministic": "deterministic",
    "deterministicseq": "deterministic",
    "det": "deterministic",
}


class _Numbers:
    """Parses numeric fields and remembers which were written as fractions."""

    def __init__(self):
        self.fractions: dict[str, str] = {}

    def __call__(self, value, where: str) -> float:
        if isinstance(value, bool):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        if isinstance(value, (int, float)):
            return float(value)
        if isinstance(value, str):
            text = value.strip()
            try:
                if "/" in text:
                    out = float(Fraction(text))
                    self.fractions[where] = text
                    return out
                return float(text)
            except (ValueError, ZeroDivisionError):
                pass
        raise ConfigError(f"{where}: cannot parse {value!r} as a number")

    def many(self, values, where: str) -> list:
        if not isinstance(values, (list, tuple)):
            raise ConfigError(f"{where}: expected a list")
        return [self(v, f"{where}[{i}]") for i, v in enumerate(values)]


def _bitstring(value, where) -> str:
    if value is None:
        return ""
    text = str(value) if not isinstance(value, list) else "".join(str(v) for v in value)
    if any(c not in "01" for c in text):
        raise ConfigError(f"{where}: binary string may only contain 0 and 1, got {value!r}")
    return text


def parse_measure(decl: dict, where: str, num: Optional[_Numbers] = None) -> Measure:
    num = num or _Numbers()
    if not isinstance(decl, dict) or "kind" not in decl:
        raise ConfigError(f"{where}: a measure needs a 'kind'")
    kind = _KINDS.get(str(decl["kind"]).lower().replace("_", "").replace("-", ""))
    try:
        if kind == "bernoulli":
            return BernoulliIID(num(decl.get("theta"), f"{where}.theta"))
        if kind == "deterministic":
            cycle = _bitstring(decl.get("cycle"), f"{where}.cycle")
            if not cycle:
                raise ConfigError(f"{where}.cycle must be a nonempty binary string")
            return DeterministicSeq(_bitstring(decl.get("head"), f"{where}.head"), cycle)
        if kind == "markov":
            order = int(decl.get("order", 1))
            table = decl.get("table")
            if isinstance(table, dict):
                ctxs = ["".join(c) for c in product("01", repeat=order)]
                missing = [c for c in ctxs if c not in {str(k).zfill(order) for k in table}]
                if missing:
                    raise ConfigError(f"{where}.table lacks contexts {missing}")
                lookup = {str(k).zfill(order): v for k, v in table.items()}
                probs = [num(lookup[c], f"{where}.table.{c}") for c in ctxs]
            else:
                probs = num.many(table, f"{where}.table")
            init = decl.get("initial")
            init = None if init is None else num.many(init, f"{where}.initial")
            return MarkovBinary(order, tuple(probs), None if init is None else tuple(init))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}: unknown measure kind {decl['kind']!r}")


def _expand_models(decls, num) -> list:
    if not isinstance(decls, list) or not decls:
        raise ConfigError("models: expected a nonempty list")
    out = []
    for i, decl in enumerate(decls):
        kind = str(decl.get("kind", "")).lower() if isinstance(decl, dict) else ""
        if kind == "deterministic-family":
            # every length-k prefix, continued with zeros
            k = int(decl.get("k", 0))
            if k < 1:
                raise ConfigError(f"models[{i}].k must be a positive integer")
            out.extend(DeterministicSeq("".join(p), "0") for p in product("01", repeat=k))
        elif kind == "bernoulli-grid":
            for j, th in enumerate(num.many(decl.get("thetas"), f"models[{i}].thetas")):
                out.append(BernoulliIID(th))
        else:
            out.append(parse_measure(decl, f"models[{i}]", num))
    return out


def _model_class(models, weights, num) -> ModelClass:
    try:
        if weights is None or weights == "uniform":
            return ModelClass(models)
        if isinstance(weights, dict) and "complexities" in weights:
            return ModelClass(models, None, complexities=[int(c) for c in weights["complexities"]])
        if isinstance(weights, list):
            w = num.many(weights, "weights")
            if len(w) != len(models):
                raise ConfigError(f"weights: {len(w)} given for {len(models)} models")
            total = sum(w)
            if abs(total - 1.0) > 1e-12:
                raise ConfigError(f"weights: normalization violated, weights sum to {total:.17g} instead of 1")
            return ModelClass(models, w)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"weights: {exc}") from exc
    raise ConfigError(f"weights: expected 'uniform', a list, or {{complexities: [...]}}, got {weights!r}")


def _schedule(value) -> Optional[PeriodicMask]:
    if value is None or value == "static":
        return None
    if isinstance(value, dict) and value.get("kind") == "periodic-mask":
        try:
            return PeriodicMask(int(value["period"]), tuple(value.get("mask", ())))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"loss.schedule: {exc}") from exc
    raise ConfigError(f"loss.schedule: unknown schedule {value!r}")


def _loss(decl, num) -> LossSpec:
    if not isinstance(decl, dict) or "table" not in decl:
        raise ConfigError("loss: needs a 'table' of four numbers l00, l01, l10, l11")
    table = num.many(decl["table"], "loss.table")
    if len(table) != 4:
        raise ConfigError("loss.table: needs exactly four numbers")
    lo = num(decl["l_min"], "loss.l_min") if "l_min" in decl else None
    hi = num(decl["l_max"], "loss.l_max") if "l_max" in decl else None
    schedule = _schedule(decl.get("schedule"))
    try:
        return LossSpec.static(table, lo, hi, schedule=schedule)
    except ValueError as exc:
        raise ConfigError(f"loss: {exc}") from exc


@dataclass
class ExperimentConfig:
    env_id: str
    models: list
    model_class: Optional[ModelClass]
    mu: Optional[Measure]
    loss: Optional[LossSpec]
    game: Optional[dict]
    horizons: list
    mode: str = "exact"
    samples: int = 100_000
    seed: int = 0
    exact_cap: int = DEFAULT_EXACT_CAP
    verify: InequalityGridSpec = field(default_factory=InequalityGridSpec)
    fractions: dict = field(default_factory=dict)
    text: str = ""

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()

    @property
    def horizon(self) -> int:
        return max(self.horizons)

    def require_mu_in_class(self):
        if self.mu is None or self.model_class is None:
            raise ConfigError(f"{self.env_id}: config needs 'models' and 'mu'")
        try:
            self.model_class.weight_of(self.mu)
        except ValueError as exc:
            raise ConfigError(f"{self.env_id}: mu must be one of the declared models ({exc})") from exc

    def require_loss(self) -> LossSpec:
        if self.loss is None:
            raise ConfigError(f"{self.env_id}: config needs a 'loss' section")
        return self.loss

    def game_spec(self) -> GameSpec:
        self.require_mu_in_class()
        if self.game is None:
            raise ConfigError(f"{self.env_id}: config needs a 'game' section")
        try:
            return GameSpec(self.mu, self.model_class, n=self.horizon, exact_cap=self.exact_cap, **self.game)
        except ValueError as exc:
            raise ConfigError(f"game: {exc}") from exc


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw: Any = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    num = _Numbers()
    env_id = str(raw.get("id", "env"))

    models, model_class, mu = [], None, None
    if "models" in raw:
        models = _expand_models(raw["models"], num)
        model_class = _model_class(models, raw.get("weights", "uniform"), num)
    if "mu" in raw:
        decl = raw["mu"]
        if isinstance(decl, int) and not isinstance(decl, bool):
            if not 0 <= decl < len(models):
                raise ConfigError(f"mu: index {decl} is outside the {len(models)} declared models")
            mu = models[decl]
        else:
            mu = parse_measure(decl, "mu", num)

    loss = _loss(raw["loss"], num) if "loss" in raw else None
    game = None
    if "game" in raw:
        g = raw["game"]
        if not isinstance(g, dict) or "profit" not in g:
            raise ConfigError("game: needs a 'profit' table of four numbers")
        game = {"profit": tuple(num.many(g["profit"], "game.profit"))}
        for key in ("p_max", "p_delta"):
            if key in g:
                game[key] = num(g[key], f"game.{key}")

    if "horizons" in raw:
        horizons = [int(h) for h in raw["horizons"]]
    else:
        horizons = [int(raw.get("horizon", 1))]
    if any(h < 1 for h in horizons):
        raise ConfigError("horizons must be positive integers")

    mode = str(raw.get("mode", "exact"))
    if mode not in ("exact", "monte-carlo"):
        raise ConfigError(f"mode: expected 'exact' or 'monte-carlo', got {mode!r}")
    mc = raw.get("mc", {}) or {}
    samples = int(mc.get("samples", 100_000))
    if samples < 2:
        raise ConfigError("mc.samples must be at least 2")

    verify = InequalityGridSpec()
    if "verify" in raw:
        v = raw["verify"] or {}
        try:
            verify = InequalityGridSpec(
                A_values=tuple(num.many(v.get("A", list(verify.A_values)), "verify.A")),
                resolution=int(v.get("resolution", verify.resolution)),
                tolerance=num(v.get("tolerance", verify.tolerance), "verify.tolerance"),
            )
        except ValueError as exc:
            raise ConfigError(f"verify: {exc}") from exc

    return ExperimentConfig(
        env_id=env_id,
        models=models,
        model_class=model_class,
        mu=mu,
        loss=loss,
        game=game,
        horizons=horizons,
        mode=mode,
        samples=samples,
        seed=int(mc.get("seed", 0)),
        exact_cap=int(raw.get("exact_cap", DEFAULT_EXACT_CAP)),
        verify=verify,
        fractions=dict(num.fractions),
        text=text,
    )


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
