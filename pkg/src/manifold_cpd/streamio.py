"""On-disk stream format shared by the CLI tools.

Header line:  # manifold=<spd|grassmann> p=<int> k=<int> T=<int>
then one record per line: the row-major flattened matrix, space-separated,
17 significant digits (exact double round-trip).  k is 0 for SPD streams.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .geometry.base import Manifold, ManifoldPoint, ValidationError
from .geometry.grassmann import GrassmannManifold
from .geometry.spd import SpdManifold


class StreamFormatError(RuntimeError):
    """Malformed stream file."""


_HEADER_RE = re.compile(
    r"^#\s*manifold=(spd|grassmann)\s+p=(\d+)\s+k=(\d+)\s+T=(\d+)\s*$"
)


def write_stream(
    path: Union[str, Path], ops: Manifold, points: Sequence[ManifoldPoint]
) -> None:
    k = ops.shape[1] if ops.tag == "grassmann" else 0
    lines = [f"# manifold={ops.tag} p={ops.shape[0]} k={k} T={len(points)}"]
    for pt in points:
        lines.append(" ".join(f"{v:.17g}" for v in pt.data.ravel()))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_stream(path: Union[str, Path]) -> tuple[Manifold, list[ManifoldPoint]]:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise StreamFormatError(f"{path}: empty file")
    m = _HEADER_RE.match(lines[0])
    if m is None:
        raise StreamFormatError(
            f"{path}: line 1: malformed header (expected "
            f"'# manifold=<spd|grassmann> p=<int> k=<int> T=<int>')"
        )
    tag, p, k, length = m.group(1), int(m.group(2)), int(m.group(3)), int(m.group(4))
    if tag == "spd":
        ops: Manifold = SpdManifold(p)
        n_vals = p * p
    else:
        ops = GrassmannManifold(p, k)
        n_vals = p * k
    points = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != n_vals:
            raise StreamFormatError(
                f"{path}: line {lineno}: expected {n_vals} values, got {len(parts)}"
            )
        try:
            data = np.array([float(v) for v in parts]).reshape(ops.shape)
        except ValueError as exc:
            raise StreamFormatError(f"{path}: line {lineno}: {exc}") from None
        pt = ops.point(data)
        try:
            ops.validate(pt)
        except ValidationError as exc:
            raise StreamFormatError(f"{path}: line {lineno}: {exc}") from None
        points.append(pt)
    if len(points) != length:
        raise StreamFormatError(
            f"{path}: header says T={length} but found {len(points)} records"
        )
    return ops, points
