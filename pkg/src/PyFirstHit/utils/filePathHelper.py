# -*- coding: utf-8 -*-
"""
File: filePathHelper.py
Description: 文件夹与文件写入工具。 Folder creation, collision-free names and atomic writes.
Version: 0.1.0
"""
import os
import tempfile
from contextlib import contextmanager
from typing import Iterator, TextIO


def EnsureFolders(path: str) -> str:
    """
    确保文件夹存在，如果不存在则创建该文件夹。

    Args:
        path (str): 要确保存在的文件夹路径。空字符串表示当前目录。

    Returns:
        str: 已创建或已存在的文件夹路径。

    Usage:
        folder_path = EnsureFolders("./data/logs")
    """
    path = path.strip().rstrip("\\")
    if path and not os.path.exists(path):
        os.makedirs(path)
    return path


def NoDuplicateFile(directory: str, filename: str, file_extension: str = "") -> str:
    """
    生成不重名的文件路径，如果文件已存在则自动加序号。

    Args:
        directory (str): 文件所在的目录路径。
        filename (str): 文件的基本名称（不含扩展名）。
        file_extension (str, optional): 文件扩展名，例如 '.log'。

    Returns:
        str: 不与现有文件冲突的完整路径。

    Usage:
        new_file_path = NoDuplicateFile("./data/logs", "train", ".log")
        # ./data/logs/train.log, 已存在时为 ./data/logs/train_1.log
    """
    candidate = filename + file_extension
    index = 1
    while os.path.exists(os.path.join(directory, candidate)):
        candidate = f"{filename}_{index}{file_extension}"
        index += 1
    return os.path.join(directory, candidate)


@contextmanager
def AtomicWrite(path: str, newline: str = "") -> Iterator[TextIO]:
    """
    原子写入文本文件：先写临时文件，成功后再重命名覆盖目标文件。

    A crash or an exception inside the block leaves any existing file at `path` untouched.

    Args:
        path (str): 目标文件路径。
        newline (str): 传给 open() 的 newline 参数，CSV 写入时保持为空字符串。

    Usage:
        with AtomicWrite("./out/samples.csv") as fp:
            fp.write("x1,x2\\n")
    """
    directory = os.path.dirname(os.path.abspath(path))
    EnsureFolders(directory)
    fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline=newline) as fp:
            yield fp
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
