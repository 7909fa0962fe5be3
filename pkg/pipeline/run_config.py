import hashlib
import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path

from config import Config
from utils.errors import ConfigError

INTERNAL_KEYS = ("handler",)
# Flags that never change what a command writes
OUTPUT_NEUTRAL_KEYS = ("force", "threads")


def _plain(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


@dataclass(frozen=True)
class RunConfig:
    """
    Fully resolved settings of one command. Flags already carry the
    environment/Config defaults, so the values here are final.
    """
    command: str
    values: dict = field(default_factory=dict)

    @classmethod
    def from_args(cls, args):
        values = {k: _plain(v) for k, v in sorted(vars(args).items()) if k not in INTERNAL_KEYS and k != "command"}
        return cls(args.command, values)

    def __getattr__(self, name):
        values = self.__dict__.get("values", {})
        if name in values:
            return values[name]
        raise AttributeError(name)

    def get(self, name, default=None):
        return self.values.get(name, default)

    def canonical_json(self):
        values = {k: v for k, v in self.values.items() if k not in OUTPUT_NEUTRAL_KEYS}
        return json.dumps({"command": self.command, **values}, sort_keys=True, separators=(",", ":"))

    @property
    def config_hash(self):
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def provenance(self):
        return {
            "tool": Config.TOOL_NAME,
            "version": Config.VERSION,
            "command": self.command,
            "config_hash": self.config_hash,
        }


def prepare_output_dir(path, force=False):
    """
    Creates ``path``; an existing non-empty directory is only replaced with
    ``force``.
    """
    path = Path(path)
    if path.exists():
        if path.is_dir() and not any(path.iterdir()):
            return path
        if not force:
            raise ConfigError(f"output {path} already exists (use --force to overwrite)")
        if path.is_dir():
            shutil.rmtree(path)
        else:
            path.unlink()
    path.mkdir(parents=True)
    return path


def prepare_output_file(path, force=False):
    path = Path(path)
    if path.exists() and not force:
        raise ConfigError(f"output {path} already exists (use --force to overwrite)")
    path.parent.mkdir(parents=True, exist_ok=True)
    return path
