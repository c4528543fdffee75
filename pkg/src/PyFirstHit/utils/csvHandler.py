# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : csvHandler.py
@Description: CSV 文件格式：轨迹、轨迹池、样本、报告与训练日志。写入均为原子操作，读取错误带行号。
@Version    : v0.1.0
@Dependencies:
    - csv
    - numpy
@Changelog  :
    - v0.0.0: Generic read/append/delete helpers.
    - v0.1.0: Typed trajectory and sample formats, comment metadata, atomic writes.
"""
import csv
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .constants import FLOAT_FORMAT
from .exceptions import FormatError, ParseError
from .filePathHelper import AtomicWrite

TRAJECTORY_FIELDS = ("traj_id", "step", "t", "hit")


def FormatFloat(value: float) -> str:
    return format(float(value), FLOAT_FORMAT)


def ParseComment(line: str) -> Tuple[str, Dict[str, str]]:
    """
    解析 `# <tag> key=value key=value` 注释行。

    Usage:
        ParseComment("# pool scheme=sphere:d=2,eps=0.01 n=10 seed=3")
        # ("pool", {"scheme": "sphere:d=2,eps=0.01", "n": "10", "seed": "3"})
    """
    tokens = line.lstrip("#").split()
    if not tokens:
        return "", {}
    meta = {}
    for token in tokens[1:]:
        key, _, value = token.partition("=")
        meta[key] = value
    return tokens[0], meta


class CsvHandler:
    """
    Readers and writers of the CSV files exchanged by the command line tools.

    Every file may start with one `#` comment line carrying metadata; writes go through AtomicWrite.
    """

    # 写入 CSV 文件
    def write_csv(self, filename: str, header: Sequence[str], rows: Iterable[Sequence],
                  comment: Optional[str] = None) -> None:
        with AtomicWrite(filename) as fp:
            if comment:
                fp.write(f"# {comment}\n")
            writer = csv.writer(fp, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)

    # 读取 CSV 文件
    def read_csv(self, filename: str) -> Tuple[Optional[str], List[str], List[Tuple[int, List[str]]]]:
        """
        Returns:
            (comment line or None, header, [(line number, fields), ...]) with blank lines skipped.
        """
        comment = None
        header: List[str] = []
        rows: List[Tuple[int, List[str]]] = []
        with open(filename, "r", encoding="utf-8", newline="") as fp:
            for number, line in enumerate(fp, start=1):
                text = line.strip()
                if not text:
                    continue
                if text.startswith("#"):
                    if header:
                        raise ParseError("comment after the header", number)
                    comment = text
                    continue
                fields = next(csv.reader([text]))
                if not header:
                    header = [f.strip() for f in fields]
                else:
                    rows.append((number, fields))
        if not header:
            raise FormatError(f"{filename} has no header")
        return comment, header, rows

    # ------------------------------------------------------------ trajectories
    def write_trajectories(self, filename: str, trajectories, comment: Optional[str] = None) -> None:
        """Write `traj_id,step,t,hit,x1..xd`, one row per stored step."""
        trajectories = list(trajectories)
        dim = trajectories[0].states.shape[1] if trajectories else 0
        header = list(TRAJECTORY_FIELDS) + [f"x{i + 1}" for i in range(dim)]

        def _rows():
            for traj in trajectories:
                flag = "1" if traj.hit else "0"
                for k, (t, state) in enumerate(zip(traj.times, traj.states)):
                    yield [str(traj.stream_id), str(k), FormatFloat(t), flag] + [FormatFloat(v) for v in state]

        self.write_csv(filename, header, _rows(), comment)

    def read_trajectories(self, filename: str):
        """
        Returns:
            (list of Trajectory, comment metadata dict). A hit trajectory exits at its last row.

        Raises:
            FormatError: wrong header.
            ParseError: malformed or out-of-order rows.
        """
        from ..core.sdeCore import Trajectory

        comment, header, rows = self.read_csv(filename)
        if tuple(header[:4]) != TRAJECTORY_FIELDS or len(header) < 5:
            raise FormatError(f"{filename}: expected header traj_id,step,t,hit,x1,..., got {','.join(header)}")
        dim = len(header) - 4
        groups: Dict[int, List[Tuple[int, float, bool, List[float]]]] = {}
        order: List[int] = []
        for number, fields in rows:
            if len(fields) != dim + 4:
                raise ParseError(f"expected {dim + 4} fields, got {len(fields)}", number)
            try:
                traj_id, step = int(fields[0]), int(fields[1])
                t = float(fields[2])
                hit = fields[3].strip() in ("1", "true", "True")
                state = [float(v) for v in fields[4:]]
            except ValueError as err:
                raise ParseError(str(err), number) from err
            if traj_id not in groups:
                groups[traj_id] = []
                order.append(traj_id)
            group = groups[traj_id]
            if step != len(group):
                raise ParseError(f"trajectory {traj_id}: expected step {len(group)}, got {step}", number)
            if group and t <= group[-1][1]:
                raise ParseError(f"trajectory {traj_id}: times must increase", number)
            group.append((step, t, hit, state))
        trajectories = []
        for traj_id in order:
            group = groups[traj_id]
            hit = group[0][2]
            times = np.array([g[1] for g in group])
            last = len(group) - 1
            trajectories.append(Trajectory(times=times, states=np.array([g[3] for g in group]), hit=hit,
                                           hit_index=last if hit else -1,
                                           tau=float(times[-1]) if hit else math.nan, stream_id=traj_id))
        meta = ParseComment(comment)[1] if comment else {}
        return trajectories, meta

    # ----------------------------------------------------------------- samples
    def write_samples(self, filename: str, batch, with_tau: Optional[bool] = None) -> None:
        """Write `x1..xd[,tau]`; a `# samples truncated=K` comment records discarded runs."""
        if with_tau is None:
            with_tau = len(batch) > 0 and bool(np.all(np.isfinite(batch.taus)))
        header = [f"x{i + 1}" for i in range(batch.dim)] + (["tau"] if with_tau else [])
        rows = ([FormatFloat(v) for v in point] + ([FormatFloat(tau)] if with_tau else [])
                for point, tau in zip(batch.points, batch.taus))
        comment = f"samples truncated={batch.truncated_count}" if batch.truncated_count else None
        self.write_csv(filename, header, rows, comment)

    def read_samples(self, filename: str):
        """
        Read a sample file into a SampleBatch; tau is optional.

        Raises:
            FormatError: header is not x1..xd[,tau].
            ParseError: malformed row, with its line number.
        """
        from ..core.sdeCore import SampleBatch

        comment, header, rows = self.read_csv(filename)
        with_tau = header[-1] == "tau"
        coords = header[:-1] if with_tau else header
        if not coords or coords != [f"x{i + 1}" for i in range(len(coords))]:
            raise FormatError(f"{filename}: expected header x1,...,xd[,tau], got {','.join(header)}")
        width = len(header)
        points, taus = [], []
        for number, fields in rows:
            if len(fields) != width:
                raise ParseError(f"expected {width} fields, got {len(fields)}", number)
            try:
                values = [float(v) for v in fields]
            except ValueError as err:
                raise ParseError(str(err), number) from err
            if not all(math.isfinite(v) for v in values[:len(coords)]):
                raise ParseError("non-finite coordinate", number)
            points.append(values[:len(coords)])
            taus.append(values[-1] if with_tau else math.nan)
        truncated = 0
        if comment:
            meta = ParseComment(comment)[1]
            truncated = int(meta.get("truncated", 0))
        points = np.array(points, dtype=float).reshape(len(points), len(coords))
        return SampleBatch(points, np.array(taus), truncated)

    # ---------------------------------------------------------- report tables
    def write_table(self, filename: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
        """Write report, convergence or training-log rows; floats use 17 significant digits."""
        formatted = ([FormatFloat(v) if isinstance(v, (float, np.floating)) else str(v) for v in row]
                     for row in rows)
        self.write_csv(filename, header, formatted)
