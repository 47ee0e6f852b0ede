# -*- coding: utf-8 -*-
# The MIT License (MIT)
#
# Copyright (c) 2024, cgcn developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
"""
Utility functions: config files, the checkpoint container and run summaries.
"""
import os
import struct
import typing
from datetime import datetime
from typing import Dict, Tuple

import numpy as np
import yaml
from parse import parse

from cgcn.autodiff import Tensor
from cgcn.globals import (
    CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
    SUMMARY_FNAME,
    ConfigurationError,
)

CONFIG_LINE_TEMPLATE = "{key}={value}"

_TRUE = ("true", "1", "yes", "on")
_FALSE = ("false", "0", "no", "off")


def read_config_file(path: str) -> Dict[str, Tuple[str, int]]:
    """
    Read a flat ``key = value`` file. ``#`` starts a comment, blank lines are
    skipped.

    Parameters
    ----------
    path: str
        Path to the config file.

    Returns
    -------
    entries: dict
        key -> (raw value, line number). Later lines override earlier ones.
    """
    entries = {}
    with open(path, "r") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            res = parse(CONFIG_LINE_TEMPLATE, line)
            if res is None:
                raise ConfigurationError(
                    f"{path}, line {lineno}: expected 'key = value', "
                    f"got '{line}'")
            entries[res["key"].strip()] = (res["value"].strip(), lineno)
    return entries


def parse_override(item: str) -> Tuple[str, str]:
    """Split a ``KEY=VALUE`` command line override."""
    res = parse(CONFIG_LINE_TEMPLATE, item)
    if res is None:
        raise ConfigurationError(f"Expected KEY=VALUE, got '{item}'")
    return res["key"].strip(), res["value"].strip()


def coerce_value(tp, raw, key: str = "value"):
    """
    Convert a raw config value to the type `tp`. Supports bool, int, float,
    str, Optional[...] and Tuple[..., ...] (comma separated).
    Values that already have the target type are returned as they are.
    """
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    try:
        if origin is typing.Union:
            inner = [a for a in args if a is not type(None)][0]
            if raw is None or (isinstance(raw, str)
                               and raw.strip().lower() in ("", "none")):
                return None
            return coerce_value(inner, raw, key)
        if origin is tuple:
            if isinstance(raw, str):
                items = [v.strip() for v in raw.split(",") if v.strip()]
            else:
                items = list(raw)
            return tuple(coerce_value(args[0], v, key) for v in items)
        if tp is bool:
            if isinstance(raw, bool):
                return raw
            value = str(raw).strip().lower()
            if value in _TRUE:
                return True
            if value in _FALSE:
                return False
            raise ValueError(raw)
        if tp is int:
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError(raw)
            return int(raw)
        if tp is float:
            return float(raw)
        return str(raw)
    except (TypeError, ValueError):
        type_name = getattr(tp, "__name__", tp)
        raise ConfigurationError(
            f"Cannot convert '{raw}' for '{key}' to {type_name}")


def save_checkpoint(path: str, tensors: Dict[str, Tensor]):
    """
    Write named tensors to the binary checkpoint container.

    Layout (all integers uint32, little endian): magic ``CGCNCKPT``, version,
    tensor count, then per tensor in name order: name length, UTF-8 name,
    rows, cols, rows * cols float64 values in row-major order.
    """
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<II", CHECKPOINT_VERSION, len(tensors)))
        for name in sorted(tensors):
            t = tensors[name]
            encoded = name.encode("utf-8")
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<II", t.rows, t.cols))
            f.write(np.ascontiguousarray(t.data, dtype="<f8").tobytes())


def load_checkpoint(path: str) -> Dict[str, Tensor]:
    """Read a checkpoint written by :func:`save_checkpoint`."""
    with open(path, "rb") as f:
        blob = f.read()

    def _take(offset, size):
        if offset + size > len(blob):
            raise ConfigurationError(f"Checkpoint {path} is truncated")
        return blob[offset:offset + size], offset + size

    magic, pos = _take(0, len(CHECKPOINT_MAGIC))
    if magic != CHECKPOINT_MAGIC:
        raise ConfigurationError(f"{path} is not a cgcn checkpoint")
    header, pos = _take(pos, 8)
    version, count = struct.unpack("<II", header)
    if version != CHECKPOINT_VERSION:
        raise ConfigurationError(
            f"Checkpoint version {version} is not supported, expected "
            f"{CHECKPOINT_VERSION}")

    tensors = {}
    for _ in range(count):
        raw, pos = _take(pos, 4)
        name, pos = _take(pos, struct.unpack("<I", raw)[0])
        raw, pos = _take(pos, 8)
        rows, cols = struct.unpack("<II", raw)
        values, pos = _take(pos, 8 * rows * cols)
        data = np.frombuffer(values, dtype="<f8").reshape(rows, cols)
        tensors[name.decode("utf-8")] = Tensor(data, requires_grad=True)
    if pos != len(blob):
        raise ConfigurationError(f"Trailing bytes in checkpoint {path}")
    return tensors


def update_summary_file(out_dir: str, props: dict, out_file=None) -> str:
    """
    Write run settings as yml file, adding the `last_update` time stamp.

    Parameters
    ----------
    out_dir: str
        Run output directory.
    props: dict
        Properties to write, e.g. the config echo and dataset description.
    out_file: str, optional (default: None)
        Path to summary file. If not specified, `overview.yml` in `out_dir`
        is used. An existing file is overwritten.

    Returns
    -------
    out_file: str
        Path of the written file.
    """
    props = dict(props)
    props['last_update'] = str(datetime.now())
    if out_file is None:
        out_file = os.path.join(out_dir, SUMMARY_FNAME)
    with open(out_file, 'w') as f:
        yaml.dump(props, f, default_flow_style=False, sort_keys=False)
    return out_file


def read_summary_yml(path: str) -> dict:
    """
    Read the `overview.yml` file of a previous run.

    Parameters
    ----------
    path: str
        Run directory containing `overview.yml`, or the file itself.
    """
    if os.path.isdir(path):
        path = os.path.join(path, SUMMARY_FNAME)
    if not os.path.isfile(path):
        raise FileNotFoundError(
            f"No {SUMMARY_FNAME} file found at {path}. This file is required "
            f"to continue from the settings of a previous run. NOTE: Use "
            f"`cgcn pretrain` first.")
    with open(path, 'r') as f:
        return yaml.safe_load(f)
