"""INI-style files for studies, evaluation states and transaction lists.

Study config::

    [engine]
    seed = 42
    n_runs = 500
    samples = 5000
    epsilon = 0.01

    [scenario revenue-trap]
    preset = revenue-trap        ; optional starting point
    daily_visitors = 4000
    max_days = 200
    control = A
    correct_winner =             ; empty: no variant should ship
    variants = A, B
    A.true_conv_rate = 0.030
    A.true_aov = 100
    A.aov_std = 40
    ...

State file (for ``evaluate`` and ``ppc``)::

    [engine]
    epsilon = 0.01
    samples = 20000
    control = A

    [variant A]
    visitors = 28000
    conversions = 840
    value_count = 840
    value_sum = 84000.0
    value_sum_sq = 9744000.0
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .decision import VariantState
from .posterior import BetaPosterior, NigPosterior, ValueSummary
from .simulation import PRESETS, EngineConfig, ScenarioConfig, VariantTruth

PRIOR_KEYS = (
    "conv_prior_alpha",
    "conv_prior_beta",
    "value_prior_mu",
    "value_prior_n",
    "value_prior_alpha",
    "value_prior_beta",
)
ENGINE_KEYS = {"seed", "n_runs", "samples", "epsilon", "alpha", "min_days", "max_days",
               "peeking_alternative", *PRIOR_KEYS}
DESK_N_RUNS = 500
DESK_SAMPLES = 5000


class ConfigError(ValueError):
    pass


@dataclass
class StudyConfig:
    engine: EngineConfig
    n_runs: int
    scenarios: list = field(default_factory=list)
    # scenario name -> {variant index: (BetaPosterior, NigPosterior)}
    scenario_priors: dict = field(default_factory=dict)

    def engine_for(self, scenario: ScenarioConfig) -> EngineConfig:
        vp = self.scenario_priors.get(scenario.name)
        return replace(self.engine, variant_priors=vp) if vp else self.engine


def _read_ini(path) -> configparser.ConfigParser:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cp


def _num(section, key, conv, default=None):
    raw = section.get(key)
    if raw is None or raw.strip() == "":
        if default is None:
            raise ConfigError(f"[{section.name}] missing required key {key!r}")
        return default
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} = {raw!r} is not a valid {conv.__name__}") from None


def _priors(section, prefix: str = "", base: Optional[tuple] = None) -> tuple[BetaPosterior, NigPosterior]:
    b, n = base or (BetaPosterior(), NigPosterior())
    get = lambda k, d: _num(section, prefix + k, float, d)  # noqa: E731
    try:
        return (
            BetaPosterior(get("conv_prior_alpha", b.alpha), get("conv_prior_beta", b.beta)),
            NigPosterior(get("value_prior_mu", n.mu), get("value_prior_n", n.n_pseudo),
                         get("value_prior_alpha", n.alpha), get("value_prior_beta", n.beta)),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[{section.name}] {exc}") from None


def _index(names, label, section, key) -> int:
    if label in names:
        return names.index(label)
    raise ConfigError(f"[{section.name}] {key} = {label!r} is not one of the variants {names}")


def engine_from_section(section, overrides: Optional[dict] = None) -> tuple[EngineConfig, int]:
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    unknown = set(section.keys()) - ENGINE_KEYS
    if unknown:
        raise ConfigError(f"[{section.name}] unknown keys: {sorted(unknown)}")
    conv, value = _priors(section)
    try:
        cfg = EngineConfig(
            epsilon=overrides.get("epsilon", _num(section, "epsilon", float, 0.01)),
            sample_count=overrides.get("samples", _num(section, "samples", int, DESK_SAMPLES)),
            alpha=overrides.get("alpha", _num(section, "alpha", float, 0.05)),
            min_days=overrides.get("min_days", _num(section, "min_days", int, 1)),
            conv_prior=conv,
            value_prior=value,
            seed=overrides.get("seed", _num(section, "seed", int, 42)),
            peeking_alternative=section.get("peeking_alternative", "larger").strip(),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[{section.name}] {exc}") from None
    n_runs = overrides.get("n_runs", _num(section, "n_runs", int, DESK_N_RUNS))
    if n_runs < 1:
        raise ConfigError(f"[{section.name}] n_runs must be >= 1")
    return cfg, n_runs


def scenario_from_section(section, name: str, engine: EngineConfig):
    base = None
    if section.get("preset"):
        try:
            base = PRESETS[section["preset"].strip()]
        except KeyError:
            raise ConfigError(f"[{section.name}] unknown preset {section['preset']!r}; "
                              f"choose from {sorted(PRESETS)}") from None
    if section.get("variants"):
        names = [s.strip() for s in section["variants"].split(",") if s.strip()]
    elif base is not None:
        names = base.names
    else:
        raise ConfigError(f"[{section.name}] missing required key 'variants'")

    variants, priors = [], {}
    for i, nm in enumerate(names):
        bv = base.variants[i] if base is not None and i < len(base.variants) else None
        try:
            variants.append(VariantTruth(
                nm,
                _num(section, f"{nm}.true_conv_rate", float, bv.true_conv_rate if bv else None),
                _num(section, f"{nm}.true_aov", float, bv.true_aov if bv else None),
                _num(section, f"{nm}.aov_std", float, bv.aov_std if bv else None),
            ))
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"[{section.name}] {exc}") from None
        if any(f"{nm}.{k}" in section for k in PRIOR_KEYS):
            priors[i] = _priors(section, f"{nm}.", (engine.conv_prior, engine.value_prior))

    control = _index(names, section["control"].strip(), section, "control") if section.get("control") else 0
    if "correct_winner" in section:
        cw_raw = section["correct_winner"].strip()
        correct = _index(names, cw_raw, section, "correct_winner") if cw_raw else None
    else:
        correct = base.correct_winner if base is not None else None
    try:
        sc = ScenarioConfig(
            name=name,
            daily_visitors=_num(section, "daily_visitors", int, base.daily_visitors if base else None),
            variants=tuple(variants),
            max_days=_num(section, "max_days", int, base.max_days if base else 200),
            control=control,
            correct_winner=correct,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[{section.name}] {exc}") from None
    return sc, priors


def load_study(path, overrides: Optional[dict] = None) -> StudyConfig:
    cp = _read_ini(path)
    engine_sec = cp["engine"] if cp.has_section("engine") else cp["DEFAULT"]
    engine, n_runs = engine_from_section(engine_sec, overrides)
    study = StudyConfig(engine, n_runs)
    max_days = (overrides or {}).get("max_days")
    if max_days is None and engine_sec.get("max_days"):
        max_days = _num(engine_sec, "max_days", int)
    for sec_name in cp.sections():
        if not sec_name.startswith("scenario "):
            if sec_name != "engine":
                raise ConfigError(f"{path}: unexpected section [{sec_name}]")
            continue
        name = sec_name[len("scenario "):].strip()
        sc, priors = scenario_from_section(cp[sec_name], name, engine)
        if max_days is not None:
            sc = replace(sc, max_days=max_days)
        study.scenarios.append(sc)
        if priors:
            study.scenario_priors[name] = priors
    if not study.scenarios:
        raise ConfigError(f"{path}: no [scenario <name>] sections")
    return study


def study_from_preset(name: str, overrides: Optional[dict] = None) -> StudyConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    cp = configparser.ConfigParser()
    cp.add_section("engine")
    engine, n_runs = engine_from_section(cp["engine"], overrides)
    sc = PRESETS[name]
    if (overrides or {}).get("max_days") is not None:
        sc = replace(sc, max_days=overrides["max_days"])
    return StudyConfig(engine, n_runs, [sc])


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def _prior_lines(conv: BetaPosterior, value: NigPosterior, prefix: str = "") -> list[str]:
    vals = (conv.alpha, conv.beta, value.mu, value.n_pseudo, value.alpha, value.beta)
    return [f"{prefix}{k} = {_fmt(v)}" for k, v in zip(PRIOR_KEYS, vals)]


def dump_study(study: StudyConfig) -> str:
    """Serialize a resolved study; :func:`load_study` on the result reproduces it."""
    e = study.engine
    lines = [
        "[engine]",
        f"seed = {e.seed}",
        f"n_runs = {study.n_runs}",
        f"samples = {e.sample_count}",
        f"epsilon = {_fmt(e.epsilon)}",
        f"alpha = {_fmt(e.alpha)}",
        f"min_days = {e.min_days}",
        f"peeking_alternative = {e.peeking_alternative}",
        *_prior_lines(e.conv_prior, e.value_prior),
    ]
    for sc in study.scenarios:
        names = sc.names
        lines += [
            "",
            f"[scenario {sc.name}]",
            f"daily_visitors = {sc.daily_visitors}",
            f"max_days = {sc.max_days}",
            f"control = {names[sc.control]}",
            f"correct_winner = {'' if sc.correct_winner is None else names[sc.correct_winner]}",
            f"variants = {', '.join(names)}",
        ]
        for v in sc.variants:
            lines += [
                f"{v.name}.true_conv_rate = {_fmt(v.true_conv_rate)}",
                f"{v.name}.true_aov = {_fmt(v.true_aov)}",
                f"{v.name}.aov_std = {_fmt(v.aov_std)}",
            ]
        for i, (cp_, vp) in sorted(study.scenario_priors.get(sc.name, {}).items()):
            lines += _prior_lines(cp_, vp, f"{names[i]}.")
    return "\n".join(lines) + "\n"


@dataclass
class EvaluationState:
    names: list
    states: list
    epsilon: float
    samples: int
    control: int


def load_state(path) -> EvaluationState:
    cp = _read_ini(path)
    engine = cp["engine"] if cp.has_section("engine") else cp["DEFAULT"]
    defaults = _priors(engine)
    names, states = [], []
    for sec_name in cp.sections():
        if not sec_name.startswith("variant "):
            if sec_name != "engine":
                raise ConfigError(f"{path}: unexpected section [{sec_name}]")
            continue
        sec = cp[sec_name]
        name = sec_name[len("variant "):].strip()
        visitors = _num(sec, "visitors", int)
        conversions = _num(sec, "conversions", int)
        count = _num(sec, "value_count", int, conversions)
        vs_sum = _num(sec, "value_sum", float, 0.0)
        vs_sq = _num(sec, "value_sum_sq", float, 0.0)
        if conversions > visitors:
            raise ConfigError(f"[{sec_name}] conversions ({conversions}) exceed visitors ({visitors})")
        if count != conversions:
            raise ConfigError(f"[{sec_name}] value_count ({count}) must equal conversions ({conversions})")
        if count > 0 and vs_sq + 1e-9 * abs(vs_sq) < vs_sum * vs_sum / count:
            raise ConfigError(f"[{sec_name}] value_sum_sq is smaller than value_sum^2 / value_count")
        conv, value = _priors(sec, base=defaults)
        try:
            states.append(VariantState(len(states), visitors, conversions,
                                       ValueSummary(count, vs_sum, vs_sq), conv, value))
        except ValueError as exc:
            raise ConfigError(f"[{sec_name}] {exc}") from None
        names.append(name)
    if not states:
        raise ConfigError(f"{path}: no [variant <name>] sections")
    control_label = engine.get("control", names[0]).strip()
    if control_label not in names:
        raise ConfigError(f"[engine] control = {control_label!r} is not one of the variants {names}")
    eps = _num(engine, "epsilon", float, 0.01)
    samples = _num(engine, "samples", int, 20000)
    if not eps > 0 or samples < 1:
        raise ConfigError("[engine] epsilon must be positive and samples >= 1")
    return EvaluationState(names, states, eps, samples, names.index(control_label))


def load_transactions(path) -> list[float]:
    """One value per line; blank lines and ``#`` comments are skipped."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"transactions file not found: {path}")
    values = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: cannot parse {text!r} as a number") from None
    return values
