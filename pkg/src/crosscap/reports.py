"""Deterministic file emitters: JSON with sorted keys and 17-digit floats,
fixed-column CSV, SVG conic drawings, and OBJ meshes.

Identical inputs must produce byte-identical files, so every number is
formatted through one code path and no locale or hash ordering leaks in.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import UsageError
from .invariants import FocalConic, form_bundle


def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return f"{x:.17g}"


def to_json(obj, indent=0) -> str:
    """Minimal JSON writer with sorted keys and reproducible floats."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist(), indent)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = ",\n".join(inner + to_json(v, indent + 1) for v in obj)
        return "[\n" + items + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f'{inner}"{key}": ' + to_json(obj[key], indent + 1)
            for key in sorted(obj)
        )
        return "{\n" + items + "\n" + pad + "}"
    raise UsageError(f"cannot serialize object of type {type(obj).__name__}")


def write_json(path, obj):
    path.write_text(to_json(obj) + "\n", encoding="utf-8")


def trace_csv(table) -> str:
    lines = [",".join(table.COLUMNS)]
    for row in table.rows:
        cells = []
        for name in table.COLUMNS:
            value = getattr(row, name)
            cells.append(value if isinstance(value, str) else f"{float(value):.17g}")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


# -- SVG conic -------------------------------------------------------------------

_SVG_HEADER = (
    '<svg xmlns="http://www.w3.org/2000/svg" viewBox="-5 -5 10 10" '
    'width="400" height="400">\n'
    '<rect x="-5" y="-5" width="10" height="10" fill="white"/>\n'
)


def conic_svg(conic: FocalConic) -> str:
    """Draw the conic in the normal-plane coordinates, y axis upward."""
    parts = [_SVG_HEADER, '<g transform="scale(1,-1)" stroke="black" ']
    parts.append('stroke-width="0.03" fill="none">\n')
    for branch in _conic_branches(conic.M, conic.b, conic.c):
        points = " ".join(f"{fmt_float(x)},{fmt_float(y)}" for x, y in branch)
        parts.append(f'<polyline points="{points}"/>\n')
    parts.append("</g>\n")
    parts.append(
        f'<text x="-4.7" y="-4.4" font-size="0.5" fill="black">{conic.kind}</text>\n'
    )
    parts.append("</svg>\n")
    return "".join(parts)


def _conic_branches(M, b, c, span=8.0, samples=129):
    """Sampled point chains covering the zero set of w^T M w + b.w + c."""
    M = np.asarray(M, float)
    b = np.asarray(b, float)
    evals, evecs = np.linalg.eigh(M)
    scale = float(np.sum(M * M) + b @ b + c * c) + 1e-300
    branches = []

    small = np.abs(evals) <= 1e-9 * math.sqrt(scale)
    if small.all():
        # purely linear: a single line b.w + c = 0
        nb = np.linalg.norm(b)
        if nb == 0.0:
            return []
        direction = np.array([-b[1], b[0]]) / nb
        base = -c * b / nb**2
        return [
            [tuple(base + t * direction) for t in np.linspace(-span, span, 2)]
        ]

    if small.any():
        # parabolic family: one flat direction
        i1 = int(np.argmax(np.abs(evals)))
        i0 = 1 - i1
        l1 = evals[i1]
        d1, d0 = evecs[:, i1], evecs[:, i0]
        b1, b0 = float(b @ d1), float(b @ d0)
        if abs(b0) <= 1e-9 * math.sqrt(scale):
            # parallel / double lines: l1 y1^2 + b1 y1 + c = 0
            disc = b1 * b1 - 4.0 * l1 * c
            if disc < 0.0:
                return []
            for root in sorted({(-b1 - math.sqrt(disc)) / (2 * l1), (-b1 + math.sqrt(disc)) / (2 * l1)}):
                line = [
                    tuple(root * d1 + t * d0) for t in np.linspace(-span, span, 2)
                ]
                branches.append(line)
            return branches
        ts = np.linspace(-span, span, samples)
        chain = []
        for y1 in ts:
            y0 = -(l1 * y1 * y1 + b1 * y1 + c) / b0
            chain.append(tuple(y1 * d1 + y0 * d0))
        return [chain]

    center = np.linalg.solve(M, -b / 2.0)
    cprime = float(c + b @ center / 2.0)
    l0, l1 = evals
    d0, d1 = evecs[:, 0], evecs[:, 1]
    if l0 * l1 > 0.0:
        if cprime == 0.0:
            return [[tuple(center)]]
        r0sq, r1sq = -cprime / l0, -cprime / l1
        if r0sq <= 0.0 or r1sq <= 0.0:
            return []  # imaginary ellipse
        r0, r1 = math.sqrt(r0sq), math.sqrt(r1sq)
        ts = np.linspace(0.0, 2.0 * math.pi, samples)
        return [
            [
                tuple(center + r0 * math.cos(t) * d0 + r1 * math.sin(t) * d1)
                for t in ts
            ]
        ]

    # hyperbola or crossing lines
    if l0 < 0.0:
        l0, l1 = l1, l0
        d0, d1 = d1, d0
    if abs(cprime) <= 1e-12 * math.sqrt(scale):
        slope = math.sqrt(-l0 / l1)
        for sgn in (1.0, -1.0):
            direction = d1 + sgn * slope * d0
            direction = direction / np.linalg.norm(direction)
            branches.append(
                [tuple(center + t * direction) for t in np.linspace(-span, span, 2)]
            )
        return branches
    tmax = math.asinh(span)
    ts = np.linspace(-tmax, tmax, samples)
    if cprime < 0.0:
        a_len, b_len = math.sqrt(-cprime / l0), math.sqrt(cprime / l1)
        trans, conj = d0, d1
    else:
        a_len, b_len = math.sqrt(cprime / -l1), math.sqrt(cprime / l0)
        trans, conj = d1, d0
    for sgn in (1.0, -1.0):
        branches.append(
            [
                tuple(
                    center
                    + sgn * a_len * math.cosh(t) * trans
                    + b_len * math.sinh(t) * conj
                )
                for t in ts
            ]
        )
    return branches


# -- OBJ meshes -------------------------------------------------------------------


def mesh_obj(f, u_range, v_range, nu, nv):
    """Row-major triangulated evaluation of a plain germ over a grid.

    Returns (obj_text, vertices); per-vertex scalars are emitted separately.
    """
    if nu < 2 or nv < 2:
        raise UsageError("mesh needs at least a 2 x 2 grid")
    us = np.linspace(u_range[0], u_range[1], nu)
    vs = np.linspace(v_range[0], v_range[1], nv)
    lines = ["# crosscap surface mesh"]
    vertices = []
    for u0 in us:
        for v0 in vs:
            p = f.evaluate((u0, v0))
            vertices.append((u0, v0))
            lines.append(
                "v " + " ".join(f"{float(x):.17g}" for x in p)
            )
    for i in range(nu - 1):
        for j in range(nv - 1):
            a = i * nv + j + 1
            b = (i + 1) * nv + j + 1
            c = (i + 1) * nv + j + 2
            d = i * nv + j + 2
            lines.append(f"f {a} {b} {c}")
            lines.append(f"f {a} {c} {d}")
    return "\n".join(lines) + "\n", vertices


def mesh_k_signs(f, vertices) -> str:
    """One Gauss-sign per vertex (-1, 0, 1), aligned with the OBJ order."""
    out = []
    for u0, v0 in vertices:
        K = form_bundle(f, (u0, v0)).K
        sign = 0 if K == 0.0 else (1 if K > 0 else -1)
        out.append(str(sign))
    return "\n".join(out) + "\n"
