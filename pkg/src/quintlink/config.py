"""Flat key-value config files and their mapping onto ExperimentConfig.

Format: one ``key = value`` per line, ``#`` comments, no sections.  List
values are comma-separated.  Unknown keys are rejected so typos fail
loudly.
"""

from __future__ import annotations

from pathlib import Path

from .models import Architecture, TrainConfig
from .pipeline import ExperimentConfig
from .quintuplets import QuintupletKind, SplitRatios
from .synthgen import EdgeDensities, SynthConfig


class ConfigError(ValueError):
    pass


_KNOWN_KEYS = {
    "data.source", "data.path",
    "synth.companies", "synth.products", "synth.certificates", "synth.countries",
    "synth.industries", "synth.signal", "synth.partitions",
    "density.has_product", "density.has_cert", "density.supplies_to", "density.purchased_by",
    "kinds", "embedders", "architectures", "embedding.endpoint",
    "train.batch_size", "train.learning_rate", "train.max_epochs", "train.patience",
    "split.train", "split.val", "split.test",
    "template.supply", "template.cert",
    "report.balanced_uniform", "bench.repeats", "seed",
}

_KIND_NAMES = {
    "supply": QuintupletKind.SUPPLIES_PRODUCT_TO,
    "cert": QuintupletKind.WITH_CERT_HAS_PRODUCT,
}


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        out[key] = value.strip()
    return out


def load_config_file(path) -> dict[str, str]:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def _get(values: dict[str, str], key: str, cast, default):
    if key not in values or values[key] == "":
        return default
    try:
        return cast(values[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {values[key]!r} ({exc})") from None


def _bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _csv_list(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def experiment_config(values: dict[str, str],
                      seed: int | None = None) -> ExperimentConfig:
    """Build a validated ExperimentConfig; ``seed`` overrides the file's.

    Accepts the typed dict from a run manifest as well as parsed config
    text, so a manifest alone suffices to re-run an experiment.
    """
    values = {k: str(v) for k, v in values.items()}
    resolved_seed = seed if seed is not None else _get(values, "seed", int, None)
    if resolved_seed is None:
        raise ConfigError("a seed is mandatory: set 'seed' in the config or pass --seed")

    synth_defaults = SynthConfig()
    density_defaults = EdgeDensities()
    synth = SynthConfig(
        companies=_get(values, "synth.companies", int, synth_defaults.companies),
        products=_get(values, "synth.products", int, synth_defaults.products),
        certificates=_get(values, "synth.certificates", int, synth_defaults.certificates),
        countries=_get(values, "synth.countries", int, synth_defaults.countries),
        industries=_get(values, "synth.industries", int, synth_defaults.industries),
        signal=_get(values, "synth.signal", float, synth_defaults.signal),
        densities=EdgeDensities(
            has_product=_get(values, "density.has_product", float, density_defaults.has_product),
            has_cert=_get(values, "density.has_cert", float, density_defaults.has_cert),
            supplies_to=_get(values, "density.supplies_to", float, density_defaults.supplies_to),
            purchased_by=_get(values, "density.purchased_by", float, density_defaults.purchased_by),
        ),
        seed=resolved_seed,
    )
    try:
        synth.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    kind_names = _get(values, "kinds", _csv_list, ("supply",))
    try:
        kinds = tuple(_KIND_NAMES[k] for k in kind_names)
    except KeyError as exc:
        raise ConfigError(f"unknown quintuplet kind {exc.args[0]!r}; "
                          f"expected one of {sorted(_KIND_NAMES)}") from None

    arch_names = _get(values, "architectures", _csv_list, ("ann",))
    try:
        architectures = tuple(Architecture(a) for a in arch_names)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    templates = []
    for name, kind in _KIND_NAMES.items():
        pattern = values.get(f"template.{name}")
        if pattern:
            templates.append((kind, pattern))

    try:
        train = TrainConfig(
            batch_size=_get(values, "train.batch_size", int, 64),
            learning_rate=_get(values, "train.learning_rate", float, 0.001),
            max_epochs=_get(values, "train.max_epochs", int, 500),
            patience=_get(values, "train.patience", int, 10),
            seed=resolved_seed,
        )
        ratios = SplitRatios(
            train=_get(values, "split.train", float, 0.7),
            val=_get(values, "split.val", float, 0.1),
            test=_get(values, "split.test", float, 0.2),
        )
        config = ExperimentConfig(
            source=_get(values, "data.source", str, "synth"),
            data_path=_get(values, "data.path", str, None),
            synth=synth,
            partitions=_get(values, "synth.partitions", int, 1),
            kinds=kinds,
            embedders=_get(values, "embedders", _csv_list, ("hash-384",)),
            architectures=architectures,
            train=train,
            ratios=ratios,
            templates=tuple(templates),
            endpoint=_get(values, "embedding.endpoint", str, None),
            balanced_uniform=_get(values, "report.balanced_uniform", _bool, False),
            repeats=_get(values, "bench.repeats", int, 1),
            seed=resolved_seed,
        )
        config.validate()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return config
