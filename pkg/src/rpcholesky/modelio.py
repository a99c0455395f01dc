"""Text serialization for fitted models and factors.

Models are stored as a single JSON object::

    {"format": "rpcholesky-model", "version": 1, "kind": "krr" | "cluster", ...}

KRR payload: ``kernel`` ({family, bandwidth}), ``lam``, ``n_train``,
``pivots`` (training indices), ``pivot_points`` (k x d), ``coef`` (k).
Cluster payload: ``m``, ``pivots``, ``embedding`` (N x m), ``centroids``
(c x m), ``labels`` (N).  Floats are written with full round-trip precision.

Factors go to ``.npz`` archives with arrays ``F``, ``pivots``,
``source_dim`` and ``format_version``.
"""

from __future__ import annotations

import json

import numpy as np

from .clustering import ClusterModel
from .core import NystromFactor
from .krr import KrrModel
from .oracle import KernelSpec

FORMAT = "rpcholesky-model"
VERSION = 1

__all__ = ["save_model", "load_model", "save_factor", "load_factor"]


def _model_to_dict(model):
    head = {"format": FORMAT, "version": VERSION}
    if isinstance(model, KrrModel):
        return head | {
            "kind": "krr",
            "kernel": {"family": model.kernel.family, "bandwidth": model.kernel.bandwidth},
            "lam": model.lam,
            "n_train": model.n_train,
            "pivots": [int(s) for s in model.pivots],
            "pivot_points": np.asarray(model.points).tolist(),
            "coef": np.asarray(model.coef).tolist(),
        }
    if isinstance(model, ClusterModel):
        return head | {
            "kind": "cluster",
            "m": model.m,
            "pivots": [int(s) for s in model.pivots],
            "embedding": np.asarray(model.embedding).tolist(),
            "centroids": np.asarray(model.centroids).tolist(),
            "labels": [int(v) for v in model.labels],
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def save_model(path, model):
    with open(path, "w") as fh:
        json.dump(_model_to_dict(model), fh)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        obj = json.load(fh)
    if obj.get("format") != FORMAT:
        raise ValueError(f"{path}: not a {FORMAT} file")
    if obj.get("version") != VERSION:
        raise ValueError(f"{path}: unsupported version {obj.get('version')}")
    if obj["kind"] == "krr":
        pts = np.array(obj["pivot_points"], dtype=float)
        return KrrModel(
            pivots=np.array(obj["pivots"], dtype=np.intp),
            coef=np.array(obj["coef"], dtype=float),
            kernel=KernelSpec(**obj["kernel"]),
            points=pts.reshape(len(obj["pivots"]), -1) if pts.size else pts.reshape(0, 0),
            lam=obj["lam"],
            n_train=obj["n_train"],
        )
    if obj["kind"] == "cluster":
        return ClusterModel(
            m=obj["m"],
            embedding=np.array(obj["embedding"], dtype=float),
            labels=np.array(obj["labels"], dtype=int),
            centroids=np.array(obj["centroids"], dtype=float),
            pivots=np.array(obj["pivots"], dtype=np.intp),
        )
    raise ValueError(f"{path}: unknown model kind {obj['kind']!r}")


def save_factor(path, factor):
    np.savez(
        path,
        F=factor.F,
        pivots=factor.pivots,
        source_dim=np.int64(factor.source_dim),
        format_version=np.int64(VERSION),
    )


def load_factor(path):
    with np.load(path) as z:
        return NystromFactor(z["F"], z["pivots"], int(z["source_dim"]))
