"""Runner configuration, read from a small YAML file.

Keys (all optional)::

    executor:    serial | thread-pool | worker-pool     (default thread-pool)
    workers:     positive int                           (default: logical CPU count)
    workdir:     path for task sandboxes                (default ./cwlforge-work)
    cleanup:     bool, delete successful sandboxes      (default true)
    step_limit:  positive int, expression budget        (default 1000000)
    env_policy:  inherit | clean                        (default inherit)

``workers_per_node`` is read as an alias of ``workers``. Multi-node keys such
as ``nodes`` or ``accelerators`` are accepted with a warning and ignored.
"""

from __future__ import annotations

import dataclasses
import logging
import os
from dataclasses import dataclass, field

import yaml

from cwlforge.errors import InvalidValue, YamlSyntax

log = logging.getLogger(__name__)

EXECUTORS = ("serial", "thread-pool", "worker-pool")
ENV_POLICIES = ("inherit", "clean")
ALIASES = {"workers_per_node": "workers", "max_workers": "workers", "run_dir": "workdir"}
IGNORED_KEYS = ("nodes", "accelerators", "provider", "environment", "container", "name")


@dataclass(frozen=True)
class RunnerConfig:
    executor: str = "thread-pool"
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    workdir: str = "./cwlforge-work"
    cleanup: bool = True
    step_limit: int = 1_000_000
    env_policy: str = "inherit"

    def __post_init__(self):
        if self.executor not in EXECUTORS:
            raise InvalidValue("executor", f"unsupported executor '{self.executor}' (choose from {', '.join(EXECUTORS)})")
        for key in ("workers", "step_limit"):
            v = getattr(self, key)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise InvalidValue(key, f"must be a positive integer, got {v!r}")
        if not isinstance(self.cleanup, bool):
            raise InvalidValue("cleanup", f"must be a boolean, got {self.cleanup!r}")
        if self.env_policy not in ENV_POLICIES:
            raise InvalidValue("env_policy", f"must be one of {', '.join(ENV_POLICIES)}")
        if not isinstance(self.workdir, str) or not self.workdir:
            raise InvalidValue("workdir", "must be a non-empty path")
        if os.path.exists(self.workdir) and not os.path.isdir(self.workdir):
            raise InvalidValue("workdir", f"'{self.workdir}' exists and is not a directory")


def default_config() -> RunnerConfig:
    return RunnerConfig()


def parse_config(source_text: str) -> RunnerConfig:
    try:
        data = yaml.safe_load(source_text)
    except yaml.YAMLError as exc:
        raise YamlSyntax(f"malformed YAML: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise InvalidValue("<root>", "configuration must be a mapping")
    names = {f.name for f in dataclasses.fields(RunnerConfig)}
    kwargs = {}
    for key, value in data.items():
        target = ALIASES.get(key, key)
        if target in names:
            if value is None:
                continue
            if target == "workdir":
                value = str(value)
            kwargs[target] = value
        elif key in IGNORED_KEYS:
            log.warning("config key '%s' has no effect on a single machine; ignored", key)
        else:
            log.warning("unknown config key '%s' ignored", key)
    return RunnerConfig(**kwargs)


def load_config(path: str) -> RunnerConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def serialize_config(config: RunnerConfig) -> str:
    return yaml.safe_dump(dataclasses.asdict(config), sort_keys=False)
