"""CSV and binary persistence.

Every CSV starts with one ``# meta: {json}`` line (config hash, package
version, provenance) followed by a plain header row. Floats use the shortest
repr that round-trips exactly, so re-runs are byte-identical.

Binary cache layout: raw little-endian float64, row-major (C order), no
header; the shape is stored in the ``.json`` sidecar next to it.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .basis import ConfigurationError
from .measurement import ScanDataset, TauGrid

META_PREFIX = "# meta: "


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_jsonable)


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, (set, tuple)):
        return list(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence], meta: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(META_PREFIX + _json(meta) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path: str | Path) -> tuple[dict, list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith(META_PREFIX):
            raise ConfigurationError(f"{path}: missing '# meta:' header")
        meta = json.loads(first[len(META_PREFIX):])
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigurationError(f"{path}: no header row")
    return meta, rows[0], rows[1:]


def write_binary(path: str | Path, array: np.ndarray, meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.ascontiguousarray(array, dtype="<f8")
    path.write_bytes(arr.tobytes(order="C"))
    side = {"shape": list(arr.shape), "dtype": "<f8", "order": "C", **(meta or {})}
    path.with_suffix(path.suffix + ".json").write_text(_json(side) + "\n")
    return path


def read_binary(path: str | Path, shape: Sequence[int] | None = None) -> np.ndarray:
    path = Path(path)
    if shape is None:
        shape = json.loads(path.with_suffix(path.suffix + ".json").read_text())["shape"]
    return np.frombuffer(path.read_bytes(), dtype="<f8").reshape(shape).copy()


# --- datasets ----------------------------------------------------------------

SHOT_MEAN = -1  # shot index used for shot-averaged rows


def dataset_meta(ds: ScanDataset, grid: TauGrid, meta: dict) -> dict:
    return {
        **meta,
        "dataset": {
            "bin_names": ds.bin_names,
            "bin_omegas": ds.bin_omegas,
            "register_bins": ds.register_bins,
            "sigma": ds.sigma,
            "shots": ds.shots,
            "seed": ds.seed,
            "clip": ds.clip,
            "lost": ds.lost,
            "tau_grid": [grid.coarse_start, grid.coarse_stop, grid.coarse_step, grid.window, grid.step],
            "sequence": ds.meta.get("sequence", ""),
        },
    }


def write_dataset(path: str | Path, ds: ScanDataset, grid: TauGrid, meta: dict) -> Path:
    """``tau_ps,bin,shot,population``; shot = -1 rows hold the shot mean.

    Individual shots are written too when the dataset kept them.
    """
    names = ds.bin_names

    def rows():
        for t in range(len(ds.tau)):
            tau = fmt(ds.tau[t])
            for b, name in enumerate(names):
                yield tau, name, SHOT_MEAN, ds.mean[t, b]
                if ds.samples is not None:
                    for s in range(ds.shots):
                        yield tau, name, s, ds.samples[t, s, b]

    return write_csv(path, ["tau_ps", "bin", "shot", "population"], rows(), dataset_meta(ds, grid, meta))


def read_dataset(path: str | Path) -> ScanDataset:
    meta, header, rows = read_csv(path)
    if header != ["tau_ps", "bin", "shot", "population"]:
        raise ConfigurationError(f"{path}: not a dataset file (header {header})")
    info = meta.get("dataset")
    if info is None:
        raise ConfigurationError(f"{path}: meta header lacks the dataset block")
    grid = TauGrid(*info["tau_grid"])
    tau, widx = grid.fine()
    names = info["bin_names"]
    col = {n: i for i, n in enumerate(names)}
    row_of = {fmt(t): i for i, t in enumerate(tau)}
    mean = np.full((len(tau), len(names)), np.nan)
    acc = np.zeros_like(mean)
    cnt = np.zeros_like(mean)
    try:
        for t, name, shot, pop in rows:
            i, j = row_of[t], col[name]
            if int(shot) == SHOT_MEAN:
                mean[i, j] = float(pop)
            else:
                acc[i, j] += float(pop)
                cnt[i, j] += 1
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"{path}: malformed dataset row ({exc})") from None
    missing = np.isnan(mean)
    if missing.any():
        if np.any(cnt[missing] == 0):
            raise ConfigurationError(f"{path}: dataset does not cover the tau grid")
        mean[missing] = acc[missing] / cnt[missing]
    return ScanDataset(
        tau=tau, window_index=widx, centers=grid.centers(), bin_names=names,
        bin_omegas=np.asarray(info["bin_omegas"], float), register_bins=list(info["register_bins"]),
        mean=mean, shots=int(info["shots"]), sigma=np.asarray(info["sigma"], float),
        seed=int(info["seed"]), clip=bool(info["clip"]), lost=float(info["lost"]),
        meta={"sequence": info.get("sequence", ""), "source": str(path),
              "config_hash": meta.get("config_hash")},
    )
