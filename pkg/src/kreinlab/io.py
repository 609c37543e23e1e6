"""Serialization: matrix JSON exchange format, model bundles, CSV reports.

The matrix format is a JSON object {"dim": n, "re": [[...]], "im": [[...]]}
with row-major entries; every file this package writes is UTF-8 with LF
line endings so repeated runs produce byte-identical artifacts.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import DomainError
from .models import CutoffFamily
from .operators import OperatorModel
from .perturbation import CorrectionS, Perturbation, SingularModel

__all__ = [
    "matrix_to_obj",
    "matrix_from_obj",
    "save_matrix",
    "load_matrix",
    "singular_model_to_obj",
    "singular_model_from_obj",
    "save_singular_model",
    "load_singular_model",
    "write_csv",
    "write_json",
    "export_family",
]


def matrix_to_obj(m):
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError("only square matrices are exchanged")
    return {
        "dim": int(m.shape[0]),
        "re": [[float(x) for x in row] for row in m.real],
        "im": [[float(x) for x in row] for row in m.imag],
    }


def matrix_from_obj(obj):
    dim = int(obj["dim"])
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj["im"], dtype=float)
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise DomainError("matrix payload does not match its declared dimension")
    return re + 1j * im


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_matrix(path, m):
    write_json(path, matrix_to_obj(m))


def load_matrix(path):
    with open(path, "r", encoding="utf-8") as fh:
        return matrix_from_obj(json.load(fh))


def singular_model_to_obj(sm):
    return {
        "H": matrix_to_obj(sm.model.H),
        "A": matrix_to_obj(sm.A),
        "S": matrix_to_obj(sm.S),
        "s_exponent": sm.pert.s_exponent,
        "lambda_circ": sm.lambda_circ,
    }


def singular_model_from_obj(obj):
    model = OperatorModel(matrix_from_obj(obj["H"]))
    pert = Perturbation(matrix_from_obj(obj["A"]), float(obj["s_exponent"]), model)
    corr = CorrectionS.from_matrix(matrix_from_obj(obj["S"]), model)
    return SingularModel(model, pert, corr, float(obj["lambda_circ"]))


def save_singular_model(path, sm):
    write_json(path, singular_model_to_obj(sm))


def load_singular_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return singular_model_from_obj(json.load(fh))


def write_csv(path, header, rows):
    """CSV with a header row, repr-stable numeric formatting, LF endings."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(x) for x in row) + "\n")


def _cell(x):
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def export_family(family: CutoffFamily, out_dir, levels=None):
    """Write per-level (A_n, E_n) matrices plus a manifest referencing them."""
    os.makedirs(out_dir, exist_ok=True)
    levels = list(levels if levels is not None else family.levels)
    entries = []
    for n in levels:
        a_name = f"A_{n:06d}.json"
        e_name = f"E_{n:06d}.json"
        save_matrix(os.path.join(out_dir, a_name), family.make_An(n))
        save_matrix(os.path.join(out_dir, e_name), family.make_En(n))
        entries.append({"level": int(n), "A": a_name, "E": e_name})
    manifest = {
        "s_exponent": family.s_exponent,
        "lambda_circ": family.lambda_circ,
        "levels": entries,
    }
    path = os.path.join(out_dir, "family_manifest.json")
    write_json(path, manifest)
    return path
