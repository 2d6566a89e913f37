"""Run logs routed by ``fpm(1)``: 0 silent, >0 stdout, n<0 append to ``feast<|n|>.log``."""

from __future__ import annotations

import os
import sys
import time
from typing import Iterable

from .core import EigResult, describe_info

__all__ = ["log_target", "format_run", "emit"]


def log_target(level: int, directory: str | None = None):
    """Return None (silent), ``sys.stdout`` or the log file path."""
    if level == 0:
        return None
    if level > 0:
        return sys.stdout
    return os.path.join(directory or os.getcwd(), f"feast{abs(level)}.log")


def format_run(title: str, data: Iterable[tuple], result: EigResult,
               elapsed: float | None = None) -> str:
    lines = ["*" * 56, f"*  spectral-slice: {title}", "*" * 56, "", "--- data ---"]
    for key, val in data:
        lines.append(f"{key:<28s} {val}")
    lines += ["", "--- runs ---",
              f"{'#Loop':>5} {'#Eig':>5} {'Trace':>24} {'Error-Trace':>12} {'Max-Residual':>12}"]
    for h in result.history:
        lines.append(f"{h['loop']:>5d} {h['M']:>5d} {h['trace']:>24.16E} "
                     f"{h['epsout']:>12.4E} {h['max_res']:>12.4E}")
    lines.append("")
    if result.info == 0:
        lines.append(f"==> successfully converged (loops: {result.loop})")
    lines.append(f"==> info {result.info}: {describe_info(result.info)}")
    lines.append(f"# Eigenvalue found {result.M}")
    if result.fpm is not None and result.fpm[60]:
        lines.append(f"# Inner BiCGStab it. {result.fpm[60]}")
    if elapsed is not None:
        lines.append(f"Total time (s) {elapsed:.4f}")
    lines.append("")
    return "\n".join(lines)


def emit(level: int, text: str, directory: str | None = None):
    target = log_target(level, directory)
    if target is None:
        return
    if target is sys.stdout:
        sys.stdout.write(text + "\n")
        sys.stdout.flush()
        return
    with open(target, "a", encoding="utf-8") as fh:
        fh.write(f"# {time.strftime('%Y-%m-%d %H:%M:%S')}\n")
        fh.write(text + "\n")
