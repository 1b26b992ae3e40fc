"""Deterministic CSV / JSON / SVG writers with atomic file replacement."""
import math
import os
import tempfile
from numbers import Integral, Real

import numpy as np


def format_float(x) -> str:
    return "%.17g" % float(x)


def atomic_write(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (Integral, np.integer)):
        return str(int(v))
    if isinstance(v, (Real, np.floating)):
        return format_float(v)
    s = str(v)
    if any(ch in s for ch in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_csv_cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _json(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (Integral, np.integer)):
        return str(int(v))
    if isinstance(v, (Real, np.floating)):
        x = float(v)
        return format_float(x) if math.isfinite(x) else "null"
    if isinstance(v, str):
        import json

        return json.dumps(v, ensure_ascii=False)
    if isinstance(v, dict):
        items = sorted(v.items())
        return "{" + ", ".join(f"{_json(str(k))}: {_json(x)}" for k, x in items) + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def json_text(obj) -> str:
    """JSON with sorted keys and 17-digit floats; non-finite floats become null."""
    return _json(obj) + "\n"


def level_set_svg(levels, width: int = 720, height: int = 420, n: int = 721) -> str:
    """Level sets of zeta^2/2 + sin(2 theta) on theta in [-pi, pi], zeta in [-3, 3]."""
    zmax = 3.0
    pad = 30.0
    sx = (width - 2 * pad) / (2.0 * math.pi)
    sy = (height - 2 * pad) / (2.0 * zmax)
    X = lambda th: pad + (th + math.pi) * sx
    Y = lambda z: pad + (zmax - z) * sy
    thetas = np.linspace(-math.pi, math.pi, n)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="{pad:.3f}" y="{pad:.3f}" width="{width - 2 * pad:.3f}" '
        f'height="{height - 2 * pad:.3f}" fill="none" stroke="#888"/>',
    ]
    for c in sorted(set(float(v) for v in levels)):
        cls = "level"
        if c == 1.0:
            cls += " separatrix"
        elif c == -1.0:
            cls += " equilibrium"
        if c <= -1.0:
            for th in (-0.25 * math.pi, 0.75 * math.pi):
                out.append(f'<circle class="{cls}" data-level="{c!r}" cx="{X(th):.3f}" '
                           f'cy="{Y(0.0):.3f}" r="2.5"/>')
            continue
        arg = 2.0 * (c - np.sin(2.0 * thetas))
        for sign in (1.0, -1.0):
            run = []
            runs = []
            for th, a in zip(thetas, arg):
                if a >= 0.0:
                    z = sign * math.sqrt(a)
                    if abs(z) <= zmax:
                        run.append((X(th), Y(z)))
                        continue
                if len(run) > 1:
                    runs.append(run)
                run = []
            if len(run) > 1:
                runs.append(run)
            for r in runs:
                d = "M" + " L".join(f"{x:.3f},{y:.3f}" for x, y in r)
                out.append(f'<path class="{cls}" data-level="{c!r}" d="{d}" fill="none" stroke="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
