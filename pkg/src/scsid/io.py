"""JSON / CSV formats for model specs, datasets, estimates and scenarios.

Labels are written 1-based; everything in memory is 0-based.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .bench import Scenario
from .clustering import ScsConfig
from .errors import DataFormatError, ModelSpecError
from .model import (Chessboard, Dataset, EpochDriven, HalfSpace, ModelSpec,
                    UniformBox, chessboard_inputs, example1, example1_inputs, example2)

SPEC_KEYS = {"k", "n_d", "n_y", "thetas", "sigma_e2", "sigma_w2", "switching"}
SCENARIO_KEYS = {"spec", "example", "inputs", "snr_grid", "runs", "algorithms", "seed",
                 "ratio", "restarts"}


def _reject_unknown(doc, allowed, path, where):
    extra = set(doc) - allowed
    if extra:
        raise DataFormatError(path, 1, sorted(extra)[0], f"unknown key in {where}")


# --------------------------------------------------------------------------
# ModelSpec


def switching_to_dict(rule) -> dict:
    if isinstance(rule, EpochDriven):
        blocks = rule.block_sizes()
        if blocks is not None:
            return {"type": "epoch", "blocks": blocks}
        return {"type": "epoch", "labels": (rule.labels + 1).tolist()}
    if isinstance(rule, HalfSpace):
        return {"type": "halfspace", "normal": list(rule.normal), "offset": rule.offset,
                "low": rule.low, "high": rule.high}
    return {"type": "chessboard", "cells": rule.cells, "low": rule.low, "high": rule.high,
            "classes": rule.n_classes}


def switching_from_dict(d: dict, path="<spec>"):
    kind = d.get("type")
    try:
        if kind == "epoch":
            if "blocks" in d:
                return EpochDriven.from_blocks(d["blocks"])
            labels = np.asarray(d["labels"], dtype=np.int64)
            if labels.size and labels.min() < 1:
                raise ModelSpecError("epoch labels are 1-based")
            return EpochDriven(labels - 1)
        if kind == "halfspace":
            return HalfSpace(tuple(d["normal"]), float(d.get("offset", 0.0)),
                             float(d.get("low", -1.0)), float(d.get("high", 1.0)))
        if kind == "chessboard":
            return Chessboard(int(d.get("cells", 4)), float(d.get("low", -1.0)),
                              float(d.get("high", 1.0)), int(d.get("classes", 2)))
    except KeyError as exc:
        raise DataFormatError(path, 1, f"switching.{exc.args[0]}", "missing") from None
    raise DataFormatError(path, 1, "switching.type", f"unknown switching type {kind!r}")


def spec_to_dict(spec: ModelSpec) -> dict:
    return {
        "k": spec.K,
        "n_d": spec.n_d,
        "n_y": spec.n_y,
        "thetas": [t.tolist() for t in spec.thetas],
        "sigma_e2": spec.sigma_e2,
        "sigma_w2": spec.sigma_w2,
        "switching": switching_to_dict(spec.switching),
    }


def spec_from_dict(doc: dict, path="<spec>") -> ModelSpec:
    _reject_unknown(doc, SPEC_KEYS, path, "model spec")
    for key in ("thetas", "switching"):
        if key not in doc:
            raise DataFormatError(path, 1, key, "missing")
    K = int(doc.get("k", len(doc["thetas"])))
    n_d, n_y = doc.get("n_d"), doc.get("n_y")
    thetas = []
    for i, t in enumerate(doc["thetas"]):
        a = np.asarray(t, dtype=float)
        if a.ndim == 1 and n_d is not None and n_y is not None:
            a = a.reshape(int(n_y), int(n_d))
        thetas.append(np.atleast_2d(a))
        if n_d is not None and thetas[-1].shape != (int(n_y), int(n_d)):
            raise DataFormatError(path, 1, f"thetas[{i}]",
                                  f"shape {thetas[-1].shape} != ({n_y}, {n_d})")
    if len(thetas) != K:
        raise DataFormatError(path, 1, "thetas", f"{len(thetas)} matrices for k={K}")
    try:
        return ModelSpec(tuple(thetas), float(doc.get("sigma_e2", 0.0)),
                         float(doc.get("sigma_w2", 0.0)),
                         switching_from_dict(doc["switching"], path))
    except ModelSpecError as exc:
        raise DataFormatError(path, 1, "spec", str(exc)) from None


def load_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(path, exc.lineno, "json", exc.msg) from None


def load_spec(path) -> ModelSpec:
    return spec_from_dict(load_json(path), path)


def save_spec(spec: ModelSpec, path):
    Path(path).write_text(json.dumps(spec_to_dict(spec), indent=2) + "\n")


# --------------------------------------------------------------------------
# Dataset CSV


def dataset_to_csv(ds: Dataset, path):
    n_x, n_y = ds.X.shape[0], ds.Y.shape[0]
    header = ["t"] + [f"x_{i + 1}" for i in range(n_x)] + [f"y_{i + 1}" for i in range(n_y)]
    if ds.D is not None:
        header += [f"d_{i + 1}" for i in range(ds.D.shape[0])]
    if ds.labels is not None:
        header.append("label")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for n in range(ds.n):
            row = [n + 1] + [repr(float(v)) for v in ds.X[:, n]] + [repr(float(v)) for v in ds.Y[:, n]]
            if ds.D is not None:
                row += [repr(float(v)) for v in ds.D[:, n]]
            if ds.labels is not None:
                row.append(int(ds.labels[n]) + 1)
            w.writerow(row)


def dataset_from_csv(path) -> Dataset:
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError(path, 1, "header", "empty file")
    header = [h.strip() for h in rows[0]]

    def cols(prefix):
        idx = [i for i, h in enumerate(header) if h.startswith(prefix)]
        return sorted(idx, key=lambda i: int(header[i][len(prefix):]))

    for i, h in enumerate(header):
        if h not in ("t", "label") and not any(
                h.startswith(p) and h[len(p):].isdigit() for p in ("x_", "y_", "d_")):
            raise DataFormatError(path, 1, h, "unknown column")
    xi, yi, di = cols("x_"), cols("y_"), cols("d_")
    li = header.index("label") if "label" in header else None
    if not xi:
        raise DataFormatError(path, 1, "x_1", "missing input columns")
    if not yi:
        raise DataFormatError(path, 1, "y_1", "missing output columns")
    body = [r for r in rows[1:] if r]
    if not body:
        raise DataFormatError(path, 2, "t", "no data rows")
    data = np.empty((len(body), len(header)))
    for ln, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise DataFormatError(path, ln, "row", f"{len(r)} fields, expected {len(header)}")
        for j, v in enumerate(r):
            try:
                data[ln - 2, j] = float(v)
            except ValueError:
                raise DataFormatError(path, ln, header[j], f"not a number: {v!r}") from None
            if not math.isfinite(data[ln - 2, j]):
                raise DataFormatError(path, ln, header[j], f"non-finite value {v!r}")
    labels = None
    if li is not None:
        labels = data[:, li]
        bad = np.flatnonzero((labels < 1) | (labels != np.round(labels)))
        if bad.size:
            raise DataFormatError(path, int(bad[0]) + 2, "label", "labels must be integers >= 1")
        labels = labels.astype(np.int64) - 1
    D = data[:, di].T if di else None
    return Dataset(data[:, xi].T, data[:, yi].T, D, labels)


# --------------------------------------------------------------------------
# ModelEstimate JSON


def estimate_to_dict(est, perm=None) -> dict:
    doc = {
        "k": est.K,
        "thetas": [t.tolist() for t in est.thetas],
        "labels": (est.labels.labels + 1).tolist(),
        "cluster_sizes": est.labels.sizes.tolist(),
        "residuals": list(est.residuals),
        "d_hat": est.D_hat.tolist(),
        "diagnostics": est.labels.diagnostics,
    }
    if perm is not None:
        doc["alignment"] = [int(p) + 1 for p in perm]
    return doc


# --------------------------------------------------------------------------
# Scenario JSON


def scenario_from_dict(doc: dict, path="<scenario>") -> Scenario:
    """Build a :class:`Scenario`.

    Either ``example`` (``example1`` / ``example2``) or ``spec`` plus
    ``inputs`` is required.  ``inputs`` is a matrix (N_d rows) or
    ``{"uniform": {"low", "high", "seed", "n"}}``.
    """
    _reject_unknown(doc, SCENARIO_KEYS, path, "scenario")
    seed = int(doc.get("seed", 0))
    if "example" in doc:
        name = doc["example"]
        if name == "example1":
            spec, D = example1(), example1_inputs(400, seed)
        elif name == "example2":
            spec = example2()
            D = chessboard_inputs(spec.switching, 100, seed)
        else:
            raise DataFormatError(path, 1, "example", f"unknown example {name!r}")
    elif "spec" in doc and "inputs" in doc:
        spec = spec_from_dict(doc["spec"], path)
        inp = doc["inputs"]
        if isinstance(inp, dict):
            if set(inp) != {"uniform"}:
                raise DataFormatError(path, 1, "inputs", "expected {'uniform': {...}}")
            u = inp["uniform"]
            box = UniformBox(float(u.get("low", -1.0)), float(u.get("high", 1.0)),
                             int(u.get("seed", seed)))
            if isinstance(spec.switching, EpochDriven):
                n = spec.switching.horizon
            elif "n" in u:
                n = int(u["n"])
            else:
                raise DataFormatError(path, 1, "inputs.uniform.n", "missing")
            D = box.sample(spec.n_d, n)
        else:
            D = np.atleast_2d(np.asarray(inp, dtype=float))
    else:
        raise DataFormatError(path, 1, "spec", "need 'example' or both 'spec' and 'inputs'")
    if "snr_grid" not in doc:
        raise DataFormatError(path, 1, "snr_grid", "missing")
    grid = [float(s) for s in doc["snr_grid"]]
    try:
        return Scenario(
            spec, D, tuple(grid), int(doc.get("runs", 500)),
            tuple(doc.get("algorithms", ("scs", "cml"))), seed,
            float(doc.get("ratio", 1.0)),
            ScsConfig(restarts=int(doc.get("restarts", 20)), seed=seed),
        )
    except ValueError as exc:
        raise DataFormatError(path, 1, "scenario", str(exc)) from None


def load_scenario(path) -> Scenario:
    return scenario_from_dict(load_json(path), path)
