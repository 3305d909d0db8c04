import re

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from typing import Any, Callable, Dict, List, Mapping, Optional, Type

from pydantic import ValidationError

from bran_sim.config.settings import Settings
from bran_sim.exceptions.config_errors import ConfigError, ConfigParseError, MissingRequiredError, TypeMismatchError, UnknownKeyError
from bran_sim.models.attack import AttackParams, ConfirmationCounting
from bran_sim.models.experiment import AxisScale, ExperimentConfig, GiveUp, Mode, OutputFormat, RhoDefinition, SweepAxis
from bran_sim.models.simulation import RejectionOrder
from bran_sim.models.system import SystemParams

UNBOUNDED = ("unbounded", "inf", "none")
TOML_POSITION = re.compile(r"\(at line (\d+), column (\d+)\)")


def _as_float(key: str, value: Any) -> float:
    if isinstance(value, bool):
        raise TypeMismatchError(key, "a number", value)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
    raise TypeMismatchError(key, "a number", value)


def _as_int(key: str, value: Any) -> int:
    if isinstance(value, bool):
        raise TypeMismatchError(key, "an integer", value)
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            return int(value)
        except ValueError:
            pass
    raise TypeMismatchError(key, "an integer", value)


def _as_str(key: str, value: Any) -> str:
    if not isinstance(value, str):
        raise TypeMismatchError(key, "a string", value)
    return value


def _as_give_up(key: str, value: Any) -> GiveUp:
    if value is None or (isinstance(value, str) and value.lower() in UNBOUNDED):
        return None
    try:
        return _as_int(key, value)
    except TypeMismatchError:
        raise TypeMismatchError(key, "an integer or 'unbounded'", value) from None


def _choice(enum: Type[Any]) -> Callable[[str, Any], Any]:
    def convert(key: str, value: Any) -> Any:
        try:
            return enum(value)
        except ValueError:
            raise TypeMismatchError(key, "one of " + "|".join(member.value for member in enum), value) from None

    return convert


def _list_of(item: Callable[[str, Any], Any]) -> Callable[[str, Any], List[Any]]:
    def convert(key: str, value: Any) -> List[Any]:
        if isinstance(value, str):
            value = [part.strip() for part in value.split(",") if part.strip()]
        if not isinstance(value, list) or not value:
            raise TypeMismatchError(key, "a non-empty list", value)
        return [item(key, element) for element in value]

    return convert


# every key a config document or a flag may set
KEYS: Dict[str, Callable[[str, Any], Any]] = {
    "mode": _choice(Mode),
    "lambda_a": _as_float,
    "lambda_b": _as_float,
    "lambda_c": _as_float,
    "lambda_r": _as_float,
    "k": _as_int,
    "r": _as_int,
    "s": _as_int,
    "n_conf": _as_int,
    "beta": _as_float,
    "n_g": _as_give_up,
    "rho_definition": _choice(RhoDefinition),
    "conf_counting": _choice(ConfirmationCounting),
    "rejection_order": _choice(RejectionOrder),
    "sweep.variable": _as_str,
    "sweep.start": _as_float,
    "sweep.stop": _as_float,
    "sweep.points": _as_int,
    "sweep.scale": _choice(AxisScale),
    "k_values": _list_of(_as_int),
    "n_values": _list_of(_as_int),
    "rho_values": _list_of(_as_float),
    "ng_values": _list_of(_as_give_up),
    "trials": _as_int,
    "num_arrivals": _as_int,
    "warmup_fraction": _as_float,
    "seed": _as_int,
    "workers": _as_int,
    "output": _as_str,
    "records_output": _as_str,
    "format": _choice(OutputFormat),
}

DEFAULTS: Dict[str, Any] = {
    "lambda_b": 1.0,
    "lambda_c": 1.0,
    "lambda_r": 0.0,
    "k": 1,
    "r": 1,
    "s": 2,
    "n_conf": 1,
    "n_g": None,
    "rho_definition": RhoDefinition.BLOCK,
    "conf_counting": ConfirmationCounting.INCLUSIVE,
    "rejection_order": RejectionOrder.NEWEST,
    "k_values": [1, 5, 10],
    "n_values": [1, 3],
    "rho_values": [0.3, 0.8],
    "ng_values": [None],
    "trials": 1_000_000,
    "num_arrivals": 1_000_000,
    "warmup_fraction": 0.1,
    "format": OutputFormat.CSV,
}

# the axis each sweep mode runs along when the document gives no sweep.* keys
SWEEP_DEFAULTS: Dict[Mode, Dict[str, Any]] = {
    Mode.SWEEP_RHO: {"variable": "rho", "start": 0.05, "stop": 0.95, "points": 19, "scale": AxisScale.LINEAR},
    Mode.SWEEP_CONFIRMATIONS: {"variable": "n_conf", "start": 1.0, "stop": 10.0, "points": 10, "scale": AxisScale.LINEAR},
    Mode.SWEEP_ATTACK: {"variable": "beta", "start": 0.05, "stop": 1.0, "points": 20, "scale": AxisScale.LINEAR},
}

REQUIRED: Dict[Mode, List[str]] = {
    Mode.ANALYTIC: ["lambda_a"],
    Mode.STEADY_STATE: ["lambda_a"],
    Mode.SIMULATE: ["lambda_a"],
    Mode.ATTACK: ["beta"],
}


def read_document(text: str) -> Dict[str, Any]:
    """Parse a TOML config document into flat dotted keys."""
    try:
        document = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        position = TOML_POSITION.search(str(exc))
        if position is None:
            raise ConfigParseError(str(exc)) from exc
        reason = TOML_POSITION.sub("", str(exc)).strip()
        raise ConfigParseError(reason, int(position.group(1)), int(position.group(2))) from exc

    flat: Dict[str, Any] = {}

    def flatten(prefix: str, table: Mapping[str, Any]) -> None:
        for name, value in table.items():
            key = f"{prefix}{name}"
            if isinstance(value, dict):
                flatten(f"{key}.", value)
            else:
                flat[key] = value

    flatten("", document)
    return flat


def parse_config(text: str, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """
    Build an experiment configuration from a config document and flag overrides

    Args:
        text: TOML document with flat or dotted keys, may be empty
        overrides: flag values keyed like the document; None values are ignored

    Returns:
        The validated ExperimentConfig

    Precedence, lowest first: built-in defaults, BRAN_SIM_SEED, the document, the flags.
    """
    layers = [read_document(text), {key: value for key, value in (overrides or {}).items() if value is not None}]

    merged: Dict[str, Any] = dict(DEFAULTS)
    env = Settings()
    merged["seed"] = env.seed
    merged["workers"] = env.workers
    for layer in layers:
        for key, value in layer.items():
            if key not in KEYS:
                raise UnknownKeyError(key)
            merged[key] = KEYS[key](key, value)

    if "mode" not in merged:
        raise MissingRequiredError("mode")
    mode: Mode = merged["mode"]
    for key in REQUIRED.get(mode, []):
        if key not in merged:
            raise MissingRequiredError(key)
    if mode is Mode.SWEEP_CONFIRMATIONS:
        _check_traffic_intensity("rho_values", merged["rho_values"])

    try:
        return ExperimentConfig(
            mode=mode,
            params=SystemParams(
                lambda_a=merged.get("lambda_a", 0.0),
                lambda_b=merged["lambda_b"],
                lambda_c=merged["lambda_c"],
                lambda_r=merged["lambda_r"],
                k=merged["k"],
                r=merged["r"],
                s=merged["s"],
                n_conf=merged["n_conf"],
            ),
            attack=AttackParams(
                beta=merged.get("beta", 0.0),
                n_conf=merged["n_conf"],
                give_up=merged["n_g"],
                conf_counting=merged["conf_counting"],
            ),
            sweep=_sweep_axis(mode, merged),
            k_values=merged["k_values"],
            n_values=merged["n_values"],
            rho_values=merged["rho_values"],
            ng_values=merged["ng_values"],
            rho_definition=merged["rho_definition"],
            trials=merged["trials"],
            num_arrivals=merged["num_arrivals"],
            warmup_fraction=merged["warmup_fraction"],
            rejection_order=merged["rejection_order"],
            seed=merged["seed"],
            output=merged.get("output"),
            records_output=merged.get("records_output"),
            format=merged["format"],
            workers=merged["workers"],
        )
    except ValidationError as exc:
        error = exc.errors()[0]
        key = ".".join(str(part) for part in error["loc"] if part not in ("params", "attack"))
        raise ConfigError(key, f"invalid value for '{key}': {error['msg']}") from exc


def _sweep_axis(mode: Mode, merged: Mapping[str, Any]) -> Optional[SweepAxis]:
    if mode not in SWEEP_DEFAULTS:
        return None
    axis = dict(SWEEP_DEFAULTS[mode])
    for name in axis:
        if f"sweep.{name}" in merged:
            axis[name] = merged[f"sweep.{name}"]
    if axis["variable"] != SWEEP_DEFAULTS[mode]["variable"]:
        raise ConfigError("sweep.variable", f"{mode.value} sweeps '{SWEEP_DEFAULTS[mode]['variable']}', got '{axis['variable']}'")
    try:
        sweep = SweepAxis(**axis)
    except ValidationError as exc:
        raise ConfigError("sweep", f"invalid sweep: {exc.errors()[0]['msg']}") from exc
    if sweep.variable == "rho":
        _check_traffic_intensity("sweep.start", [sweep.start])
        _check_traffic_intensity("sweep.stop", [sweep.stop])
    return sweep


def _check_traffic_intensity(key: str, values: List[float]) -> None:
    for rho in values:
        if not 0.0 <= rho < 1.0:
            raise ConfigError(key, f"traffic intensity must lie in [0, 1), got {rho} for '{key}'")
