"""Versioned binary container for offline artifacts.

Layout (documented here and in the README; all integers little-endian):

    bytes 0..7    magic ``CIROMRB1``
    bytes 8..15   uint64 length of the JSON index that follows
    index         UTF-8 JSON: format version, metadata, array table
    payload       raw C-order array bytes, at the offsets the index declares

The index's array table rows are ``{name, dtype, shape, offset, nbytes}``
with offsets relative to the start of the payload.  Writing is deterministic:
the same arrays and metadata produce byte-identical files.

Scalar coefficient functions are not serialized; loading re-binds them from a
freshly constructed model, so the stored metadata records the experiment
configuration needed to rebuild it.
"""

import json
import struct

import numpy as np

from .contour import ParabolicContour, QuadratureGrid, build_grid
from .fom import TimeWindow
from .rom import EstimatorContext, LocalBases, ReducedBasis, ReducedModel
from .sigma import SigmaLowerBounds

MAGIC = b"CIROMRB1"
FORMAT_VERSION = 1


def _write_container(path, metadata, arrays):
    table = []
    offset = 0
    blobs = []
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        blob = arr.tobytes()
        table.append({
            "name": name,
            "dtype": arr.dtype.str,
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": len(blob),
        })
        blobs.append(blob)
        offset += len(blob)
    index = json.dumps(
        {"format_version": FORMAT_VERSION, "metadata": metadata, "arrays": table},
        sort_keys=True, separators=(",", ":"),
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(index)))
        fh.write(index)
        for blob in blobs:
            fh.write(blob)


def _read_container(path):
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise ValueError(f"not a reduced-basis artifact (magic {magic!r})")
        (index_len,) = struct.unpack("<Q", fh.read(8))
        index = json.loads(fh.read(index_len).decode("utf-8"))
        if index["format_version"] != FORMAT_VERSION:
            raise ValueError(f"unsupported format version {index['format_version']}")
        payload = fh.read()
    arrays = {}
    for row in index["arrays"]:
        raw = payload[row["offset"]:row["offset"] + row["nbytes"]]
        arrays[row["name"]] = np.frombuffer(raw, dtype=np.dtype(row["dtype"])) \
            .reshape(row["shape"]).copy()
    return index["metadata"], arrays


def _provenance_json(provenance):
    out = []
    for z, mu in provenance:
        z = complex(z)
        out.append([z.real, z.imag, list(mu) if mu is not None else None])
    return out


def _provenance_from_json(rows):
    return tuple((complex(re, im), tuple(mu) if mu is not None else None)
                 for re, im, mu in rows)


def _grid_meta(grid):
    return {"a1": grid.contour.a1, "a2": grid.contour.a2, "c": grid.c, "n": grid.n}


def _grid_from_meta(meta):
    return build_grid(ParabolicContour(meta["a1"], meta["a2"]), meta["c"], meta["n"])


def save_artifact(path, grid, window, lbs, config=None, basis=None, reduced=None,
                  local=None, extra_metadata=None):
    """Serialize a fitted reduced model (pooled or per-node) with its context."""
    metadata = {
        "kind": "local" if local is not None else "global",
        "grid": _grid_meta(grid),
        "window": {"t0": window.t0, "lam": window.lam},
        "sigma_method": getattr(lbs, "method", "unknown"),
        "config": config or {},
    }
    if extra_metadata:
        metadata.update(extra_metadata)
    arrays = {
        "sigma_lb": np.asarray(getattr(lbs, "per_node", lbs), dtype=float),
        "sigma_argmins": np.asarray(getattr(lbs, "argmins", np.zeros((0, 0)))),
    }
    if local is not None:
        metadata["node_sizes"] = [int(b.n_reduced) for b in local.bases]
        metadata["provenance"] = [_provenance_json(b.provenance) for b in local.bases]
        for j, (b, r) in enumerate(zip(local.bases, local.reduced)):
            tag = f"node{j:04d}_"
            arrays[tag + "basis"] = b.columns
            arrays[tag + "op_terms"] = r.op_terms
            arrays[tag + "rhs_terms"] = r.rhs_terms
            arrays[tag + "identity"] = r.reduced_identity
            arrays[tag + "gram"] = r.gram
    else:
        metadata["provenance"] = _provenance_json(basis.provenance)
        arrays["basis"] = basis.columns
        arrays["op_terms"] = reduced.op_terms
        arrays["rhs_terms"] = reduced.rhs_terms
        arrays["identity"] = reduced.reduced_identity
        arrays["gram"] = reduced.gram
    _write_container(path, metadata, arrays)


def load_artifact(path, model):
    """Load an artifact and re-bind coefficient functions from ``model``.

    Returns a dict with keys ``kind, grid, window, ctx, basis, reduced,
    local, config``.
    """
    metadata, arrays = _read_container(path)
    grid = _grid_from_meta(metadata["grid"])
    window = TimeWindow(metadata["window"]["t0"], metadata["window"]["lam"])
    lbs = SigmaLowerBounds(per_node=arrays["sigma_lb"],
                           argmins=arrays["sigma_argmins"],
                           method=metadata.get("sigma_method", "unknown"))
    ctx = EstimatorContext(grid, window, lbs)

    def rebuild(tag, provenance):
        basis = ReducedBasis(arrays[tag + "basis"],
                             provenance=_provenance_from_json(provenance))
        if basis.n_full != model.dim:
            raise ValueError(
                f"artifact dimension {basis.n_full} does not match model {model.dim}"
            )
        reduced = ReducedModel(
            op_terms=arrays[tag + "op_terms"],
            rhs_terms=arrays[tag + "rhs_terms"],
            reduced_identity=arrays[tag + "identity"],
            gram=arrays[tag + "gram"],
            operator=model.operator,
            rhs=model.laplace_rhs,
            dim_full=model.dim,
        )
        return basis, reduced

    out = {"kind": metadata["kind"], "grid": grid, "window": window, "ctx": ctx,
           "config": metadata.get("config", {}), "basis": None, "reduced": None,
           "local": None}
    if metadata["kind"] == "local":
        bases, reduceds = [], []
        for j, prov in enumerate(metadata["provenance"]):
            b, r = rebuild(f"node{j:04d}_", prov)
            bases.append(b)
            reduceds.append(r)
        out["local"] = LocalBases(bases=bases, reduced=reduceds, logs=[])
    else:
        out["basis"], out["reduced"] = rebuild("", metadata["provenance"])
    return out
