"""Experiment configuration, artifact I/O, and the field archive.

JSON configs drive the config-driven CLI commands.  The tree is
schema-validated before any numerical work starts: unknown keys are
rejected, every violation reports the JSON pointer of the offending
node, and defaults are filled in so downstream code reads a canonical
tree.  This module is also home to the atomic file writers (temp file
plus os.replace, so readers never observe a partial artifact), the
deterministic JSON emitter (sorted keys, floats at 17 significant
digits), and the torus field archive (one .npz holding the grids plus
a JSON metadata entry).
"""

import json
import math
import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, Nonlinearity, VortexSet
from .torus import TorusDomain, TorusField

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "validate_config",
    "apply_overrides",
    "atomic_path",
    "write_text",
    "write_json",
    "dumps_json",
    "save_field",
    "load_field",
]


class ConfigError(ValueError):
    """Schema violation; pointer is the JSON pointer of the bad node."""

    def __init__(self, pointer, message):
        self.pointer = pointer if pointer else "/"
        self.reason = message
        super().__init__("%s (at %s)" % (message, self.pointer))


# ---------------------------------------------------------------------------
# schema checkers
#
# Every checker takes (value, pointer) and returns the canonical value
# or raises ConfigError.  The schema itself is a nested dict of
# (checker, required, default) triples; sections absent from the file
# are filled from their defaults so accessors never need fallbacks.


def _num(positive=False, nonneg=False, allow_none=False):
    def check(v, ptr):
        if v is None and allow_none:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(ptr, "expected a number, got %r" % (v,))
        v = float(v)
        if positive and not v > 0:
            raise ConfigError(ptr, "must be > 0, got %r" % v)
        if nonneg and v < 0:
            raise ConfigError(ptr, "must be >= 0, got %r" % v)
        return v
    return check


def _int(min_value=None, choices=None):
    def check(v, ptr):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(ptr, "expected an integer, got %r" % (v,))
        if min_value is not None and v < min_value:
            raise ConfigError(ptr, "must be >= %d, got %d" % (min_value, v))
        if choices is not None and v not in choices:
            raise ConfigError(ptr, "must be one of %s, got %d"
                              % (sorted(choices), v))
        return v
    return check


def _bool():
    def check(v, ptr):
        if not isinstance(v, bool):
            raise ConfigError(ptr, "expected true/false, got %r" % (v,))
        return v
    return check


def _str(choices=None, allow_none=False):
    def check(v, ptr):
        if v is None and allow_none:
            return None
        if not isinstance(v, str):
            raise ConfigError(ptr, "expected a string, got %r" % (v,))
        if choices is not None and v not in choices:
            raise ConfigError(ptr, "must be one of %s, got %r"
                              % (sorted(choices), v))
        return v
    return check


def _list(item, min_len=0, exact_len=None, allow_none=False):
    def check(v, ptr):
        if v is None and allow_none:
            return None
        if not isinstance(v, list):
            raise ConfigError(ptr, "expected a list, got %r" % (v,))
        if exact_len is not None and len(v) != exact_len:
            raise ConfigError(ptr, "expected exactly %d entries, got %d"
                              % (exact_len, len(v)))
        if len(v) < min_len:
            raise ConfigError(ptr, "expected at least %d entries, got %d"
                              % (min_len, len(v)))
        return [item(x, "%s/%d" % (ptr, i)) for i, x in enumerate(v)]
    return check


def _object(fields):
    """fields: name -> (checker, required, default)."""
    def check(v, ptr):
        if not isinstance(v, dict):
            raise ConfigError(ptr, "expected an object, got %r" % (v,))
        for key in sorted(v):
            if key not in fields:
                raise ConfigError("%s/%s" % (ptr, key), "unknown key")
        out = {}
        for key in fields:
            checker, required, default = fields[key]
            kptr = "%s/%s" % (ptr, key)
            if key in v:
                out[key] = checker(v[key], kptr)
            elif required:
                raise ConfigError(kptr, "required key is missing")
            else:
                out[key] = default
        return out
    return check


def _decreasing_positive(v, ptr):
    v = _list(_num(positive=True), min_len=1)(v, ptr)
    if any(b >= a for a, b in zip(v, v[1:])):
        raise ConfigError(ptr, "must be strictly decreasing")
    return v


def _decreasing_or_none(v, ptr):
    if v is None:
        return None
    return _decreasing_positive(v, ptr)


_VORTEX = _object({
    "point": (_list(_num(), exact_len=2), True, None),
    "multiplicity": (_int(min_value=0), False, 1),
})

_SCHEMA = {
    "seed": (_int(min_value=0), False, 0),
    "domain": (_object({
        "periods": (_list(_num(positive=True), exact_len=2), False, [1.0, 1.0]),
        "grid_shape": (_list(_int(min_value=2), exact_len=2), False, [256, 256]),
    }), False, None),
    "model": (_object({
        "tau": (_num(positive=True), False, 1.0),
        "epsilon": (_num(positive=True, allow_none=True), False, None),
        "nonlinearity": (_str(choices=("SigmaO3", "CSH")), False, "SigmaO3"),
    }), False, None),
    "vortices": (_object({
        "positive": (_list(_VORTEX), False, []),
        "negative": (_list(_VORTEX), False, []),
    }), False, None),
    "solver": (_object({
        "method": (_str(choices=("newton", "monotone")), False, "newton"),
        "continuation": (_decreasing_or_none, False, None),
        "max_iter": (_int(min_value=1), False, 60),
        "tol_factor": (_num(positive=True), False, 1e-10),
        "monotone_offset": (_num(positive=True), False, 25.0),
    }), False, None),
    "sweep": (_object({
        "epsilons": (_decreasing_positive, True, None),
        "K_radius": (_num(positive=True, allow_none=True), False, None),
        "ball_radius": (_num(positive=True, allow_none=True), False, None),
        "compute_eigen": (_bool(), False, False),
        "first_continuation": (_decreasing_or_none, False, None),
        "zero_tol": (_num(positive=True), False, 1e-2),
        "away_threshold": (_num(positive=True), False, 0.25),
    }), False, None),
    "stability": (_object({
        "target": (_str(choices=("torus", "radial")), True, None),
        "margin": (_num(positive=True, allow_none=True), False, None),
        "field": (_str(allow_none=True), False, None),
        "tau": (_num(positive=True), False, 1.0),
        "nu": (_num(nonneg=True), False, 0.0),
        "s": (_num(allow_none=True), False, None),
        "find_topological": (_bool(), False, False),
        "bracket": (_list(_num(), exact_len=2, allow_none=True), False, None),
        "vortex_sign": (_int(choices=(-1, 1)), False, -1),
        "r_max": (_num(positive=True), False, 1e6),
        "tol": (_num(positive=True), False, 1e-10),
        "points_per_decade": (_int(min_value=10), False, 200),
    }), False, None),
    "verify": (_object({
        "field": (_str(allow_none=True), False, None),
        "a_values": (_list(_num(positive=True), min_len=1), False,
                     [0.5, 1.0, 2.0]),
        "identity_tol": (_num(positive=True), False, 1e-3),
        "mass_tol": (_num(positive=True), False, 1e-6),
        "residual_factor": (_num(positive=True), False, 50.0),
        "ball_radius": (_num(positive=True, allow_none=True), False, None),
        "pohozaev_tol": (_num(positive=True), False, 1e-3),
    }), False, None),
    "output": (_object({
        "dir": (_str(), False, "."),
        "prefix": (_str(), False, "run"),
    }), False, None),
}

# sections that, when absent, are filled with their own defaults so the
# canonical tree always carries them; sweep and stability stay None
# when absent because their required keys have no sensible defaults
_AUTOFILL = ("domain", "model", "vortices", "solver", "verify", "output")


def validate_config(raw):
    """Canonicalize a raw config tree, raising ConfigError on violation."""
    tree = _object(_SCHEMA)(raw, "")
    for name in _AUTOFILL:
        if tree[name] is None:
            checker, _, _ = _SCHEMA[name]
            tree[name] = checker({}, "/%s" % name)
    return tree


def apply_overrides(raw, overrides):
    """Apply key=value overrides (dot paths, JSON-parsed values) to raw.

    Values that fail to parse as JSON are taken as literal strings, so
    --override output.prefix=run7 works without inner quoting.
    """
    raw = json.loads(json.dumps(raw))  # deep copy, keeps plain types
    for text in overrides:
        if "=" not in text:
            raise ConfigError("/", "override %r is not of the form key=value"
                              % text)
        key, _, value_text = text.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError("/", "override %r has an empty key" % text)
        try:
            value = json.loads(value_text)
        except ValueError:
            value = value_text
        parts = key.split(".")
        node = raw
        for i, part in enumerate(parts[:-1]):
            ptr = "/" + "/".join(parts[:i + 1])
            if isinstance(node, list):
                node = _list_step(node, part, ptr)
            else:
                if not isinstance(node, dict):
                    raise ConfigError(ptr, "cannot descend into %r"
                                      % (node,))
                node = node.setdefault(part, {})
        last = parts[-1]
        ptr = "/" + "/".join(parts)
        if isinstance(node, list):
            idx = _list_index(node, last, ptr)
            node[idx] = value
        elif isinstance(node, dict):
            node[last] = value
        else:
            raise ConfigError(ptr, "cannot assign into %r" % (node,))
    return raw


def _list_index(node, part, ptr):
    try:
        idx = int(part)
    except ValueError:
        raise ConfigError(ptr, "list index expected, got %r" % part)
    if not -len(node) <= idx < len(node):
        raise ConfigError(ptr, "index %d out of range (length %d)"
                          % (idx, len(node)))
    return idx


def _list_step(node, part, ptr):
    return node[_list_index(node, part, ptr)]


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated config tree with typed accessors for the solver objects."""

    tree: dict
    path: str = None

    @property
    def seed(self):
        return self.tree["seed"]

    def section(self, name, required=False):
        sec = self.tree.get(name)
        if sec is None and required:
            raise ConfigError("/%s" % name,
                              "section required by this command")
        return sec

    def domain(self):
        d = self.tree["domain"]
        try:
            return TorusDomain(periods=tuple(d["periods"]),
                               grid_shape=tuple(d["grid_shape"]))
        except ValueError as e:
            raise ConfigError("/domain", str(e))

    def vortices(self):
        v = self.tree["vortices"]
        try:
            return VortexSet(
                positive_vortices=tuple((tuple(e["point"]), e["multiplicity"])
                                        for e in v["positive"]),
                negative_vortices=tuple((tuple(e["point"]), e["multiplicity"])
                                        for e in v["negative"]))
        except ValueError as e:
            raise ConfigError("/vortices", str(e))

    def params(self, require_epsilon=True):
        m = self.tree["model"]
        eps = m["epsilon"]
        if eps is None:
            if require_epsilon:
                raise ConfigError("/model/epsilon",
                                  "required by this command")
            eps = 1.0  # placeholder; callers that pass False override it
        try:
            return ModelParams(tau=m["tau"], epsilon=eps,
                               nonlinearity=Nonlinearity(m["nonlinearity"]))
        except ValueError as e:
            raise ConfigError("/model", str(e))


def load_config(path, overrides=()):
    """Read, override, validate; returns an ExperimentConfig."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as e:
        raise ConfigError("/", "cannot read config: %s" % e)
    except ValueError as e:
        raise ConfigError("/", "config is not valid JSON: %s" % e)
    if overrides:
        raw = apply_overrides(raw, overrides)
    return ExperimentConfig(tree=validate_config(raw), path=os.fspath(path))


# ---------------------------------------------------------------------------
# atomic artifact writers and deterministic JSON


@contextmanager
def atomic_path(path):
    """Yield a temp path in the target directory; rename over on success."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-",
                               suffix="-" + os.path.basename(path))
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _json_scalar(v):
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return "%d" % int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        return "%.17g" % v
    if isinstance(v, str):
        return json.dumps(v)
    raise TypeError("not JSON-serializable: %r" % (v,))


def dumps_json(obj, _indent=0):
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    pad = "  " * _indent
    inner = "  " * (_indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = ["%s%s: %s" % (inner, json.dumps(str(k)),
                               dumps_json(obj[k], _indent + 1))
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not len(obj):
            return "[]"
        parts = ["%s%s" % (inner, dumps_json(x, _indent + 1)) for x in obj]
        return "[\n" + ",\n".join(parts) + "\n" + pad + "]"
    return _json_scalar(obj)


def write_text(path, text):
    with atomic_path(path) as tmp:
        with open(tmp, "w") as fh:
            fh.write(text)


def write_json(path, obj):
    write_text(path, dumps_json(obj) + "\n")


def jsonable(obj):
    """Best-effort reduction of diagnostics to JSON-clean scalars."""
    if isinstance(obj, dict):
        out = {}
        for k, v in sorted(obj.items(), key=lambda kv: str(kv[0])):
            r = jsonable(v)
            if r is not _SKIP:
                out[str(k)] = r
        return out
    if isinstance(obj, (list, tuple)):
        vals = [jsonable(v) for v in obj]
        return [v for v in vals if v is not _SKIP]
    if isinstance(obj, np.ndarray):
        if obj.size > 64:
            return _SKIP
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    return str(obj)


class _Skip:
    pass


_SKIP = _Skip()


# ---------------------------------------------------------------------------
# field archive: one .npz with u0, v, and a JSON metadata entry


def save_field(fld, path):
    """Archive a TorusField as .npz (grids plus JSON metadata)."""
    meta = {
        "periods": list(fld.domain.periods),
        "grid_shape": list(fld.domain.grid_shape),
        "tau": fld.params.tau,
        "epsilon": fld.params.epsilon,
        "nonlinearity": fld.params.nonlinearity.value,
        "positive": [[list(p), m] for p, m in fld.vortices.positive_vortices],
        "negative": [[list(p), m] for p, m in fld.vortices.negative_vortices],
        "diagnostics": jsonable(fld.diagnostics),
    }
    with atomic_path(path) as tmp:
        with open(tmp, "wb") as fh:
            np.savez(fh, u0=fld.u0, v=fld.v,
                     meta=np.bytes_(dumps_json(meta).encode()))


def load_field(path):
    """Rebuild a TorusField from an archive written by save_field."""
    with np.load(path) as npz:
        u0 = np.array(npz["u0"], dtype=float)
        v = np.array(npz["v"], dtype=float)
        meta = json.loads(bytes(npz["meta"].tolist()).decode())
    domain = TorusDomain(periods=tuple(meta["periods"]),
                         grid_shape=tuple(meta["grid_shape"]))
    vortices = VortexSet(
        positive_vortices=tuple((tuple(p), m) for p, m in meta["positive"]),
        negative_vortices=tuple((tuple(p), m) for p, m in meta["negative"]))
    params = ModelParams(tau=meta["tau"], epsilon=meta["epsilon"],
                         nonlinearity=Nonlinearity(meta["nonlinearity"]))
    if u0.shape != domain.grid_shape or v.shape != domain.grid_shape:
        raise ValueError("archive grids do not match the stored grid_shape")
    return TorusField(domain=domain, vortices=vortices, params=params,
                      u0=u0, v=v, diagnostics=meta.get("diagnostics", {}))
