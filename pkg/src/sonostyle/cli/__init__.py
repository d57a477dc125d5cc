"""Batch pipeline: ingest, prepare, train, transfer, evaluate, report."""

from .config import ConfigError, PipelineConfig, dump_config, parse_config, parse_config_text
from .main import main
from .pipeline import (PipelineError, StageResult, Workspace, cmd_evaluate, cmd_ingest, cmd_prepare, cmd_report,
                       cmd_train, cmd_transfer)
from .report import QualityReport, ReportBundle, emit_report

__all__ = [
    "ConfigError", "PipelineConfig", "PipelineError", "QualityReport", "ReportBundle", "StageResult", "Workspace",
    "cmd_evaluate", "cmd_ingest", "cmd_prepare", "cmd_report", "cmd_train", "cmd_transfer", "dump_config",
    "emit_report", "main", "parse_config", "parse_config_text",
]
