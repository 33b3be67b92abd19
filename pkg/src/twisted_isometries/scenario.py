"""Scenario files: JSON descriptions of twisted tuples, and deterministic reports.

Complex numbers are ``[re, im]`` pairs (plain reals are accepted), matrices
are row-major nested lists. ``{"phase": t}`` abbreviates ``e^(2πit) I`` and
``"identity"`` the identity.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import InvalidInputError
from .lattice import LatticeSpec
from .linalg import DEFAULT_TOL, TolerancePolicy, random_unitary
from .monomial_ops import (DirectSum, MonomialOp, TwistedTuple, chain, const_op, diag_op, model_tuple,
                           mult_op)


@dataclass
class Scenario:
    spec: LatticeSpec
    tuple_: object
    seeds: dict = field(default_factory=dict)
    tol: TolerancePolicy = DEFAULT_TOL
    raw: dict = field(default_factory=dict)

    def seed(self, name: str, default: int = 0) -> int:
        return int(self.seeds.get(name, self.seeds.get("default", default)))


# ---------------------------------------------------------------------------
# decoding


def decode_complex(x) -> complex:
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise InvalidInputError(f"cannot read {x!r} as a complex number")


def decode_matrix(x, d: int) -> np.ndarray:
    if isinstance(x, str):
        if x == "identity":
            return np.eye(d, dtype=complex)
        raise InvalidInputError(f"unknown matrix shorthand {x!r}")
    if isinstance(x, dict):
        if "phase" in x:
            return np.exp(2j * np.pi * float(x["phase"])) * np.eye(d)
        if "diag_phases" in x:
            ph = [float(t) for t in x["diag_phases"]]
            if len(ph) != d:
                raise InvalidInputError("diag_phases length must equal the fiber dimension")
            return np.diag(np.exp(2j * np.pi * np.array(ph)))
        raise InvalidInputError(f"unknown matrix object {x!r}")
    if isinstance(x, (int, float)) or (isinstance(x, list) and len(x) == 2 and
                                        all(isinstance(v, (int, float)) for v in x) and d == 1):
        return np.array([[decode_complex(x)]])
    if not isinstance(x, list) or not all(isinstance(r, list) for r in x):
        raise InvalidInputError("matrices are lists of rows")
    M = np.array([[decode_complex(v) for v in row] for row in x], dtype=complex)
    if M.shape != (d, d):
        raise InvalidInputError(f"expected a {d}x{d} matrix, got {M.shape}")
    return M


def _pair_key(key: str):
    parts = [p for p in re.split(r"[,\s]+", str(key)) if p]
    if len(parts) != 2:
        raise InvalidInputError(f"twist key {key!r} must look like 'i,j'")
    return int(parts[0]), int(parts[1])


def _decode_twists(obj, d):
    return {_pair_key(k): decode_matrix(v, d) for k, v in (obj or {}).items()}


def decode_lattice(obj) -> LatticeSpec:
    try:
        return LatticeSpec(int(obj["m"]), int(obj["d"]), int(obj["N"]))
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"lattice needs integer m, d, N: {exc}") from exc


def decode_op(obj, spec: LatticeSpec) -> MonomialOp:
    if not isinstance(obj, dict):
        raise InvalidInputError(f"operator description must be an object, got {obj!r}")
    kind = obj.get("kind")
    if kind == "mult":
        return mult_op(spec, int(obj["i"]))
    if kind == "diag":
        return diag_op(spec, int(obj["j"]), decode_matrix(obj["U"], spec.d))
    if kind == "const":
        return const_op(spec, decode_matrix(obj["U"], spec.d))
    if kind == "product":
        return chain(*[decode_op(f, spec) for f in obj["factors"]])
    if kind is None and "shift" in obj:
        gens = [decode_matrix(G, spec.d) for G in obj.get("gens", [])]
        return MonomialOp(spec, tuple(obj["shift"]), decode_matrix(obj.get("B", "identity"), spec.d),
                          tuple(gens), tuple(tuple(c) for c in obj.get("exps", [])))
    raise InvalidInputError(f"unknown operator kind {kind!r}")


def random_model(n: int, A, d: int, N: int, seed: int) -> TwistedTuple:
    """Model tuple with random simultaneously diagonal twists and tails.

    Tails then commute with each other, so twists between two indices outside
    ``A`` are set to the identity to keep the tail relations valid.
    """
    A = sorted(int(a) for a in A)
    rng = np.random.default_rng(seed)
    Q = random_unitary(d, int(rng.integers(2**31)))
    diag = lambda: Q @ np.diag(np.exp(2j * np.pi * rng.random(d))) @ Q.conj().T
    twists = {}
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if i in A or j in A:
                twists[(i, j)] = diag()
    tails = {q: diag() for q in range(1, n + 1) if q not in A}
    return model_tuple(LatticeSpec(len(A), d, N), A, twists, tails, n=n)


def decode_tuple(obj, spec: LatticeSpec | None):
    if not isinstance(obj, dict):
        raise InvalidInputError("tuple description must be an object")
    kind = obj.get("kind")
    if "lattice" in obj:
        spec = decode_lattice(obj["lattice"])
    if kind == "direct_sum":
        parts = [decode_tuple(p, spec) for p in obj.get("parts", [])]
        T = DirectSum(parts)
    elif spec is None and kind != "random_model":
        raise InvalidInputError("missing lattice")
    elif kind == "model":
        n = obj.get("n")
        T = model_tuple(spec, obj.get("A", []), _decode_twists(obj.get("twists"), spec.d),
                        {int(k): decode_matrix(v, spec.d) for k, v in (obj.get("tails") or {}).items()},
                        None if n is None else int(n))
    elif kind == "custom":
        ops = [decode_op(o, spec) for o in obj.get("ops", [])]
        T = TwistedTuple(ops, _decode_twists(obj.get("twists"), spec.d))
    elif kind == "random_model":
        d = int(obj.get("d", spec.d if spec else 1))
        N = int(obj.get("N", spec.N if spec else 6))
        T = random_model(int(obj["n"]), obj["A"], d, N, int(obj.get("seed", 0)))
    else:
        raise InvalidInputError(f"unknown tuple kind {kind!r}")
    conj = obj.get("conjugate")
    if conj is not None:
        seed = int(conj["seed"] if isinstance(conj, dict) else conj)
        if isinstance(T, DirectSum):
            T = T.conjugate_fiber([random_unitary(b.d, seed + i) for i, b in enumerate(T.blocks)])
        else:
            T = T.conjugate_fiber(random_unitary(T.d, seed))
    return T


def load_scenario(src) -> Scenario:
    """Load a scenario from a path, a JSON string or an already parsed dict."""
    if isinstance(src, dict):
        raw = src
    else:
        text = str(src)
        if not text.lstrip().startswith("{"):
            with open(text, "r", encoding="utf-8") as fh:
                text = fh.read()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"malformed JSON: {exc}") from exc
    if not isinstance(raw, dict) or "tuple" not in raw:
        raise InvalidInputError("scenario needs a 'tuple' entry")
    spec = decode_lattice(raw["lattice"]) if "lattice" in raw else None
    try:
        T = decode_tuple(raw["tuple"], spec)
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"incomplete tuple description: {exc}") from exc
    tol = DEFAULT_TOL.with_overrides(**(raw.get("tolerances") or {}))
    if spec is None:
        spec = T.blocks[0].spec
    return Scenario(spec, T, dict(raw.get("seeds") or {}), tol, raw)


# ---------------------------------------------------------------------------
# encoding


def encode_complex(z) -> list:
    return [float(np.real(z)), float(np.imag(z))]


def encode_matrix(M) -> list:
    return [[encode_complex(v) for v in row] for row in np.asarray(M)]


_FLOAT_TAG = "\x00F:"


def _prepare(obj):
    if isinstance(obj, dict):
        return {str(k): _prepare(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_prepare(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            return str(x)
        return _FLOAT_TAG + ("%.17g" % x)
    if isinstance(obj, complex):
        return [_prepare(obj.real), _prepare(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _prepare(obj.tolist())
    return obj


def dumps_report(obj, indent: int = 2) -> str:
    """Deterministic JSON: sorted keys, floats with 17 significant digits."""
    text = json.dumps(_prepare(obj), sort_keys=True, indent=indent, ensure_ascii=False)
    return re.sub(r'"\\u0000F:([^"]*)"', r"\1", text)


def make_report(command: str, inputs: dict, results: dict, passed: bool, residual=None) -> dict:
    return {
        "command": command,
        "inputs": inputs,
        "results": results,
        "residual": residual,
        "pass": bool(passed),
        "version": __version__,
    }
