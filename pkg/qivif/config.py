import hashlib
import os
from pathlib import Path
from typing import Iterable, Mapping, Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from qivif.exceptions import InvalidConfigError
from qivif.models.params import (
    PipelineParams,
    QaumMode,
    QhbfParams,
    QlrdParams,
    QlsParams,
)
from qivif.utils.style import tagged

ENV_PREFIX = "QIVIF_"


class Config:
    """
    Process-wide settings.

    Attributes:
        verbose (bool): Flag indicating whether verbose mode is enabled.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(Config, cls).__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        if self._initialized:
            return
        load_dotenv()
        self.verbose = os.getenv(f"{ENV_PREFIX}VERBOSE", "").lower() in ("1", "true", "yes")
        self._initialized = True

    def log(self, tag: str, message: str):
        if self.verbose:
            print(tagged(tag, message))


class RunConfig(BaseModel):
    """Everything one fusion run needs, after file, environment and flag overrides."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    pipeline: PipelineParams = Field(default_factory=PipelineParams)
    qls_visible: QlsParams = Field(default_factory=QlsParams)
    qls_infrared: QlsParams = Field(default_factory=QlsParams)
    qlrd_visible: QlrdParams = Field(default_factory=QlrdParams.visible)
    qlrd_infrared: QlrdParams = Field(default_factory=QlrdParams.infrared)
    qaum: QaumMode = Field(default_factory=QaumMode)
    qhbf: QhbfParams = Field(default_factory=QhbfParams)

    def replace(self, section: str, **fields) -> "RunConfig":
        """Copy with some fields of one section changed, re-validated."""
        try:
            current = getattr(self, section)
        except AttributeError:
            raise InvalidConfigError("unknown configuration section", section) from None
        try:
            updated = type(current)(**{**current.model_dump(), **fields})
        except ValidationError as exc:
            raise InvalidConfigError("invalid configuration value", _summarize(exc)) from exc
        return self.model_copy(update={section: updated})

    def digest(self) -> str:
        return hashlib.sha256(render_config(self).encode("utf-8")).hexdigest()


SECTIONS = tuple(RunConfig.model_fields)


def _summarize(exc: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()
    )


def split_key(key: str, source: str) -> tuple:
    """`SECTION__FIELD` (file/env) or `section.field` (flag) -> (section, field)."""
    sep = "." if "." in key else "__"
    section, _, name = key.strip().lower().partition(sep)
    if section not in SECTIONS or not name:
        raise InvalidConfigError(f"unknown configuration key in {source}", key)
    model = RunConfig.model_fields[section].annotation
    if name not in model.model_fields:
        raise InvalidConfigError(f"unknown configuration key in {source}", key)
    return section, name


def _parse_assignment(item: str) -> tuple:
    key, sep, value = item.partition("=")
    if not sep:
        raise InvalidConfigError("override must look like section.field=value", item)
    return key, value.strip()


def _collect(pairs: Iterable, source: str, into: dict):
    for key, value in pairs:
        section, name = split_key(key, source)
        if value is None:
            raise InvalidConfigError(f"missing value in {source}", key)
        into.setdefault(section, {})[name] = None if value.lower() == "none" else value


def load_run_config(
    path: Optional[os.PathLike] = None,
    overrides: Iterable[str] = (),
    environ: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    """
    Resolve the run configuration. Precedence, lowest first: defaults, the
    configuration file, QIVIF_SECTION__FIELD environment variables, and
    `section.field=value` overrides.
    """
    settings = Config()
    environ = os.environ if environ is None else environ
    raw: dict = {}

    if path is not None:
        if not Path(path).is_file():
            raise InvalidConfigError("configuration file not found", os.fspath(path))
        _collect(dotenv_values(path).items(), os.fspath(path), raw)

    env_pairs = [
        (key[len(ENV_PREFIX):], value)
        for key, value in environ.items()
        if key.upper().startswith(ENV_PREFIX) and "__" in key
    ]
    _collect(env_pairs, "environment", raw)
    _collect((_parse_assignment(item) for item in overrides), "flags", raw)

    config = RunConfig()
    for section, fields in raw.items():
        config = config.replace(section, **fields)
    settings.log("CONFIG", f"resolved configuration {config.digest()[:12]}")
    return config


def render_config(config: RunConfig) -> str:
    """The resolved configuration as a file that `load_run_config` reads back."""
    lines = ["# qivif configuration"]
    for section in SECTIONS:
        lines.append(f"# {section}")
        for name, value in getattr(config, section).model_dump().items():
            lines.append(f"{section.upper()}__{name.upper()}={_format(value)}")
    return "\n".join(lines) + "\n"


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)
