# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : descriptors.py
@Description: 解析 `kind:key=value,...` 形式的描述字符串（方案、密度比、解析分布、分箱）。
@Version    : v0.1.0
"""
from typing import Dict, List, Tuple

import numpy as np

from .exceptions import ConfigurationError


def SplitDescriptor(text: str) -> Tuple[str, Dict[str, str]]:
    """
    将描述字符串拆分为类型与参数字典。

    Values may themselves contain commas (vector values such as `mu=1,0`): a comma-separated
    token without `=` is appended to the previous key's value.

    Args:
        text (str): 描述字符串，例如 "vmf:kappa=5,mu=1,0"。

    Returns:
        Tuple[str, Dict[str, str]]: ("vmf", {"kappa": "5", "mu": "1,0"})

    Raises:
        ConfigurationError: 空字符串或首个参数缺少 '='。
    """
    text = text.strip()
    if not text:
        raise ConfigurationError("empty descriptor")
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    params: Dict[str, str] = {}
    last_key = None
    for token in filter(None, (t.strip() for t in rest.split(","))):
        if "=" in token:
            key, _, value = token.partition("=")
            last_key = key.strip()
            params[last_key] = value.strip()
        elif last_key is not None:
            params[last_key] += "," + token
        else:
            raise ConfigurationError(f"malformed descriptor '{text}': expected key=value, got '{token}'")
    return kind, params


def ParseVector(text: str) -> np.ndarray:
    """Parse a comma separated list of floats into a 1-d array."""
    try:
        return np.array([float(v) for v in text.split(",") if v.strip()], dtype=float)
    except ValueError as err:
        raise ConfigurationError(f"not a numeric vector: '{text}'") from err


def RequireKeys(kind: str, params: Dict[str, str], required: List[str]) -> None:
    missing = [key for key in required if key not in params]
    if missing:
        raise ConfigurationError(f"descriptor '{kind}' is missing {', '.join(missing)}")
