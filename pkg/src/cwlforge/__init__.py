"""cwlforge: run CWL CommandLineTools as futures, with inline Python-style expressions."""

from pathlib import Path

from cwlforge.binding import CommandPlan, FileRef, InputSet, OutputFile, bind_arguments, coerce_inputs, resolve_outputs
from cwlforge.config import RunnerConfig, default_config, load_config, parse_config
from cwlforge.document import ToolDocument, parse_tool, validate_tool
from cwlforge.engine import Engine, TaskHandle, wait
from cwlforge.futures import FileFuture
from cwlforge.toolapp import ToolApp, load_tool

CORPUS = Path(__file__).parent / "corpus"

__version__ = "0.1.0"

__all__ = [
    "CORPUS",
    "CommandPlan",
    "Engine",
    "FileFuture",
    "FileRef",
    "InputSet",
    "OutputFile",
    "RunnerConfig",
    "TaskHandle",
    "ToolApp",
    "ToolDocument",
    "bind_arguments",
    "coerce_inputs",
    "default_config",
    "load_config",
    "load_tool",
    "parse_config",
    "parse_tool",
    "resolve_outputs",
    "validate_tool",
    "wait",
]
