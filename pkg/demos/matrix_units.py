"""Matrix units E_{pq,sr} and the range projection family of a scalar twisted pair."""

import numpy as np

from twisted_isometries.equiv import defect_operator
from twisted_isometries.lattice import LatticeSpec
from twisted_isometries.monomial_ops import model_tuple
from twisted_isometries.relations import matrix_unit_check, matrix_units, projection_family_check

lam = np.exp(2j * np.pi * 0.3)
T = model_tuple(LatticeSpec(2, 1, 8), [1, 2], {(1, 2): [[lam]]})

for rep in (matrix_unit_check(T, 2), projection_family_check(T, [1, 2, 3, 4])):
    print(rep.title)
    for e in rep.entries:
        print(f"  {e.relation:45s} {e.residual:.2e}")

E = matrix_units(T, 1)
P = defect_operator(T, (1, 2))
print("E_{00,00} equals the defect operator:", np.allclose(E[(0, 0, 0, 0)], P))
print("rank of the defect operator:", round(np.trace(P).real))
