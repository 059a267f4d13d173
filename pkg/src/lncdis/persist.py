"""Versioned JSON container for trained networks and tree ensembles.

Floats are written with ``repr`` precision, so loading reproduces every
tensor and leaf weight exactly.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .cnn import NetworkParams, NetworkSpec
from .errors import DataError
from .gbdt import BoostedEnsemble, GbdtConfig, TreeNode

FORMAT = "lncdis-model"
VERSION = 1


def _tensor(arr: np.ndarray) -> dict:
    return {"shape": list(arr.shape), "data": [float(v) for v in arr.reshape(-1)]}


def _untensor(obj: dict) -> np.ndarray:
    return np.array(obj["data"], dtype=np.float64).reshape(obj["shape"])


def network_to_dict(params: NetworkParams) -> dict:
    spec = dataclasses.asdict(params.spec)
    return {
        "format": FORMAT,
        "version": VERSION,
        "kind": "cnn",
        "spec": {k: list(v) if isinstance(v, tuple) else v for k, v in spec.items()},
        "seed": params.seed,
        "tensors": {name: _tensor(t) for name, t in params.tensors.items()},
    }


def network_from_dict(obj: dict) -> NetworkParams:
    _check_header(obj, "cnn")
    spec = NetworkSpec(**{k: tuple(v) if isinstance(v, list) else v for k, v in obj["spec"].items()})
    return NetworkParams(spec, {k: _untensor(v) for k, v in obj["tensors"].items()}, obj.get("seed"))


def _tree_to_list(root: TreeNode) -> list:
    out = []
    for node in root.preorder():
        if node.is_leaf:
            out.append({"w": node.weight})
        else:
            out.append({"f": node.feature, "t": node.threshold, "w": node.weight})
    return out


def _tree_from_list(items: list) -> TreeNode:
    it = iter(items)

    def build():
        item = next(it)
        node = TreeNode(weight=float(item["w"]))
        if "f" in item:
            node.feature = int(item["f"])
            node.threshold = float(item["t"])
            node.left = build()
            node.right = build()
        return node

    root = build()
    if next(it, None) is not None:
        raise DataError("trailing nodes in serialized tree")
    return root


def ensemble_to_dict(ens: BoostedEnsemble) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "kind": "gbdt",
        "config": dataclasses.asdict(ens.config),
        "n_features": ens.n_features,
        "loss_trace": list(ens.loss_trace),
        "trees": [_tree_to_list(t) for t in ens.trees],
    }


def ensemble_from_dict(obj: dict) -> BoostedEnsemble:
    _check_header(obj, "gbdt")
    return BoostedEnsemble(
        [_tree_from_list(t) for t in obj["trees"]],
        GbdtConfig(**obj["config"]),
        int(obj["n_features"]),
        list(obj.get("loss_trace", [])),
    )


def _check_header(obj: dict, kind: str) -> None:
    if obj.get("format") != FORMAT:
        raise DataError("not a model file")
    if obj.get("version") != VERSION:
        raise DataError(f"unsupported model version {obj.get('version')}")
    if obj.get("kind") != kind:
        raise DataError(f"expected a {kind} model, found {obj.get('kind')}")


def save(obj: dict, path) -> None:
    Path(path).write_text(json.dumps(obj, allow_nan=False) + "\n", encoding="utf-8")


def load(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot load model {path}: {exc}") from None


def save_network(params: NetworkParams, path) -> None:
    save(network_to_dict(params), path)


def load_network(path) -> NetworkParams:
    return network_from_dict(load(path))


def save_ensemble(ens: BoostedEnsemble, path) -> None:
    save(ensemble_to_dict(ens), path)


def load_ensemble(path) -> BoostedEnsemble:
    return ensemble_from_dict(load(path))
