# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : configsHandler.py
@Description: 兼容四种配置文件（YAML、JSON、TOML、key=value），合并到默认配置后加载到命名空间
@Version    : v0.1.0
@Dependencies:
    - argparse
    - pyyaml
    - json
    - tomllib / tomli
    - loguru
@Changelog  :
    - v0.0.0: Initial version, YAML/JSON/TOML with recursive imports.
    - v0.1.0: Flat key=value files with dotted keys, deep merge, errors raised instead of printed.
"""
import argparse
import copy
import json
import os
from typing import Any, Dict

from loguru import logger

from ..utils.constants import DEFAULT_CONFIG
from ..utils.exceptions import ConfigurationError, ParseError

KEY_VALUE_EXTENSIONS = (".cfg", ".conf", ".txt", ".ini")


def Dict2Namespace(namespace, config):
    """
    Recursively convert a dictionary to a namespace object.

    Args:
        namespace (argparse.Namespace): The namespace object to update (if None, a new Namespace is created).
        config (dict): The dictionary containing configuration values.

    Returns:
        argparse.Namespace: The updated namespace with values from the dictionary.
    """
    if namespace is None:
        namespace = argparse.Namespace()
    for key, value in config.items():
        if isinstance(value, dict):
            new_value = Dict2Namespace(getattr(namespace, key, None), value)
        else:
            new_value = value
        setattr(namespace, key, new_value)

    return namespace


def DeepMerge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    """Merge `update` into a copy of `base`, descending into nested dictionaries."""
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = DeepMerge(merged[key], value)
        else:
            merged[key] = value
    return merged


def ParseScalar(text: str) -> Any:
    """把 key=value 文件中的值转换为 bool / int / float，其余保留为字符串。"""
    lowered = text.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def LoadKeyValueFile(file_path: str) -> Dict[str, Any]:
    """
    Load a flat `key=value` file; dotted keys address nested sections and `#` starts a comment.

    Usage:
        # train_boolean.cfg
        scheme = boolean:d=4
        training.epochs = 200
        simulation.dt = const:0.001

    Raises:
        ParseError: a non-empty line without '=' or with an empty key, with its line number.
    """
    config: Dict[str, Any] = {}
    with open(file_path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            key, sep, value = text.partition("=")
            key = key.strip()
            if not sep or not key:
                raise ParseError(f"expected key=value, got '{text}'", number)
            node = config
            parts = key.split(".")
            for part in parts[:-1]:
                node = node.setdefault(part, {})
                if not isinstance(node, dict):
                    raise ParseError(f"'{part}' is both a value and a section", number)
            node[parts[-1]] = ParseScalar(value.strip())
    return config


class ConfigsHandler:
    """
    A handler class for loading and managing configuration files (YAML, JSON, TOML, key=value).

    Files are deep-merged over DEFAULT_CONFIG in load order; an `import` list inside a file loads the
    listed files (relative to that file) right after it.

    Attributes:
        configs (argparse.Namespace): The merged configuration, accessible with dot notation.
    """

    def __init__(self, file_path: str = "") -> None:
        """
        Args:
            file_path (str, optional): The path to a configuration file. Defaults only when empty.

        Raises:
            ConfigurationError: the file does not exist or cannot be decoded.
        """
        self._data: Dict[str, Any] = copy.deepcopy(DEFAULT_CONFIG)
        self.configs = Dict2Namespace(None, self._data)
        if file_path:
            self.add_config_file(file_path)

    def _load_config_file(self, file_path: str) -> Dict[str, Any]:
        """
        Load a configuration file into a dictionary according to its extension.

        Args:
            file_path (str): The path to the configuration file.
        """
        file_extension = os.path.splitext(file_path)[1].lower()
        try:
            if file_extension in (".yaml", ".yml"):
                import yaml
                with open(file_path, "r", encoding="utf-8") as f:
                    config = yaml.safe_load(f) or {}
            elif file_extension == ".json":
                with open(file_path, "r", encoding="utf-8") as f:
                    config = json.load(f)
            elif file_extension == ".toml":
                try:
                    import tomllib as toml_reader
                except ModuleNotFoundError:
                    import tomli as toml_reader
                with open(file_path, "rb") as f:
                    config = toml_reader.load(f)
            elif file_extension in KEY_VALUE_EXTENSIONS or not file_extension:
                config = LoadKeyValueFile(file_path)
            else:
                raise ConfigurationError(f"Unsupported config file type: {file_extension}")
        except (ParseError, ConfigurationError):
            raise
        except Exception as err:
            raise ConfigurationError(f"Failed to load {file_path}: {err}") from err
        if not isinstance(config, dict):
            raise ConfigurationError(f"{file_path} does not contain a mapping")
        return config

    def _load_imports(self, config: Dict[str, Any], base_dir: str) -> None:
        """
        Check and recursively load configuration files specified in the 'import' field.
        """
        for import_file in config.get("import", []) or []:
            import_path = os.path.join(base_dir, import_file)
            if os.path.exists(import_path):
                self.add_config_file(import_path)
            else:
                logger.warning(f"Import file '{import_file}' not found. It will be skipped.")

    def add_config_file(self, file_path: str) -> None:
        """
        Merge a configuration file (and its imports) into the current configuration.

        Raises:
            ConfigurationError: missing or undecodable file.
        """
        if not os.path.exists(file_path):
            raise ConfigurationError(f"The file {file_path} does not exist.")
        config = self._load_config_file(file_path)
        self._data = DeepMerge(self._data, config)
        self.configs = Dict2Namespace(None, self._data)
        logger.debug(f"loaded configuration {file_path}")
        self._load_imports(config, os.path.dirname(file_path))

    def as_dict(self) -> Dict[str, Any]:
        return copy.deepcopy(self._data)

    def __getattr__(self, name):
        """
        Allows direct access to configuration attributes.

        Raises:
            AttributeError: If the attribute is not found in the configuration.
        """
        configs = self.__dict__.get("configs")
        if configs is not None and hasattr(configs, name):
            return getattr(configs, name)
        raise AttributeError(f"'ConfigsHandler' object has no attribute '{name}'")
