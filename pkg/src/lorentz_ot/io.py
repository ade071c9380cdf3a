"""Artifact file formats: instance JSON, coupling JSON, dual CSVs, field CSVs.

All floats serialize through repr (shortest round-trip decimal), so artifacts
are byte-reproducible for a fixed config and seed.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .geometry import Geometry, geometry_from_header
from .semigroup import PotentialField
from .transport import Coupling, DiscreteMeasure, DualPair


def _numpy_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=1, default=_numpy_default)


def write_json(path, data) -> None:
    Path(path).write_text(_canonical_json(data) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def config_hash(data) -> str:
    return hashlib.sha256(_canonical_json(data).encode()).hexdigest()[:16]


def measure_to_dict(mu: DiscreteMeasure) -> dict:
    return {
        "points": [[float(v) for v in p] for p in mu.points],
        "weights": [float(w) for w in mu.weights],
    }


def measure_from_dict(data: dict) -> DiscreteMeasure:
    return DiscreteMeasure(
        points=np.array(data["points"], dtype=float),
        weights=np.array(data["weights"], dtype=float),
    )


def write_instance(path, g: Geometry, mu0: DiscreteMeasure, mu1: DiscreteMeasure) -> None:
    write_json(
        path,
        {
            "geometry": g.describe(),
            "mu0": measure_to_dict(mu0),
            "mu1": measure_to_dict(mu1),
        },
    )


def read_instance(path):
    data = read_json(path)
    g = geometry_from_header(data["geometry"])
    return g, measure_from_dict(data["mu0"]), measure_from_dict(data["mu1"])


def write_coupling(path, coupling: Coupling) -> None:
    write_json(
        path,
        {
            "entries": [
                [int(i), int(j), float(m)] for i, j, m in coupling.pairs()
            ]
        },
    )


def read_coupling(path, mu0: DiscreteMeasure, mu1: DiscreteMeasure) -> Coupling:
    data = read_json(path)
    return Coupling(
        source=mu0, target=mu1, entries=np.array(data["entries"], dtype=float)
    )


def write_duals(phi_path, psi_path, duals: DualPair) -> None:
    with open(phi_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "phi"])
        for i, v in enumerate(duals.phi):
            w.writerow([i, repr(float(v))])
    with open(psi_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "psi"])
        for j, v in enumerate(duals.psi):
            w.writerow([j, repr(float(v))])


def read_duals(phi_path, psi_path) -> DualPair:
    def column(path):
        with open(path) as fh:
            rows = list(csv.reader(fh))[1:]
        return np.array([float(r[1]) for r in rows])

    return DualPair(phi=column(phi_path), psi=column(psi_path))


def write_field_csv(path, field: PotentialField) -> None:
    """Site coordinates, value, provenance tag, arg-extremum index per row."""
    arg = field.argext if field.argext is not None else [-1] * len(field)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        dim = field.sites.shape[1]
        w.writerow([f"x{k}" for k in range(dim)] + ["value", "provenance", "argext"])
        for site, val, a in zip(field.sites, field.values, arg):
            w.writerow([repr(float(c)) for c in site] + [repr(float(val)), field.provenance, int(a)])
    sidecar = Path(str(path) + ".provenance.json")
    write_json(sidecar, {"provenance": field.provenance, "sites": len(field)})


def read_field_csv(path) -> PotentialField:
    with open(path) as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    dim = len([h for h in header if h.startswith("x")])
    sites = np.array([[float(v) for v in r[:dim]] for r in body])
    values = np.array([float(r[dim]) for r in body])
    provenance = body[0][dim + 1] if body else "raw"
    argext = np.array([int(r[dim + 2]) for r in body])
    return PotentialField(sites=sites, values=values, provenance=provenance, argext=argext)


def write_curves_csv(path, pi) -> None:
    """Plot-friendly traces: curve index, mass, time, coordinates."""
    times = np.linspace(0.0, 1.0, 21)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        first = pi.curves[0][0] if len(pi) else None
        dim = len(first.start) if first is not None else 0
        w.writerow(["curve", "mass", "time"] + [f"x{k}" for k in range(dim)])
        for idx, (curve, mass) in enumerate(pi):
            for r in times:
                p = curve.point(r)
                w.writerow([idx, repr(float(mass)), repr(float(r))] + [repr(float(v)) for v in p])
