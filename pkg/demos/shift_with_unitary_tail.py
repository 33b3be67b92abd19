"""Shift in V1, unitary tail in V2: a pure H_{1} tuple with m = 1, n = 2."""

import numpy as np

from twisted_isometries.lattice import LatticeSpec
from twisted_isometries.monomial_ops import model_tuple
from twisted_isometries.relations import verify_twisted
from twisted_isometries.wold import decompose
from twisted_isometries.words import normalize, oracle_check

lam, om = np.exp(2j * np.pi * 0.3), np.exp(2j * np.pi / 3)
T = model_tuple(LatticeSpec(1, 1, 6), [1], {(1, 2): [[lam]]}, {2: [[om]]}, n=2)

rep = verify_twisted(T)
for e in rep.entries:
    print(f"{e.relation:32s} {e.residual:.2e}")

dec = decompose(T)
print("nonzero summands:", dec.nonzero(), "fiber dim", dec[(1,)].fiber_dim)
for A in dec.nonzero():
    print(dec[A].summand.table())

w = "v2 v1 v2* v1*"
print(w, "->", normalize(w), "| oracle residual", oracle_check(w, T))
