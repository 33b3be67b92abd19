"""Reducible twisted pair built from two swapped copies of (M_z1, M_z2 D_1[lam]).

Runs the relation checks, the Wold decomposition and the analytic model.
"""

import numpy as np

from twisted_isometries.cli import _example21
from twisted_isometries.equiv import irreducibility_report
from twisted_isometries.relations import derived_checks, verify_twisted
from twisted_isometries.wold import build_model, decompose, roundtrip_check

lam = np.exp(2j * np.pi * 0.3)
T = _example21(5, lam)

print("relations max residual:", verify_twisted(T).max_residual)
print("derived max residual:  ", derived_checks(T).max_residual)

dec = decompose(T)
print("nonzero summands:", dec.nonzero())
md = build_model(T, (1, 2), dec)
print("fiber dim:", md.fiber_dim)
print("model twist eigenvalues:", np.round(np.linalg.eigvals(md.twists[(1, 2)]), 12))
print("expected:", np.round([np.conj(lam), lam], 12))
print("round trip:", roundtrip_check(T, dec).max_residual)

rep = irreducibility_report(T, dec)
print("irreducibility verdict:", rep["verdict"], "| commutant dim", rep.get("commutant_dim"))
