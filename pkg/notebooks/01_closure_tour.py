"""Closure tour: which measured observables give a finite instrumental group.

Run with ``python3 notebooks/01_closure_tour.py``.
"""
from qinstrument import run_closure_spec

# Each line: generators + quadratic @ backend. The dims list is
# [dim of the observable algebra, then the instrumental tower].
CASES = [
    "x + quad @ abelian",
    "q,p + quad @ weyl",
    "jx,jy,jz + quad @ su2",
    "jz,jx + quad @ spin=1/2",
    "jz,jx + quad @ spin=1",
    "jz,jx + quad @ spin=3/2",
]

print(f"{'case':32s} {'dims':22s} verdict")
for spec in CASES:
    r = run_closure_spec(spec)
    print(f"{spec:32s} {str(r['dims']):22s} {r['verdict']}")

# Two non-commuting spin components with no representation fixed:
# the free algebra grows without bound until the cap stops it.
r = run_closure_spec("jz,jx + quad @ universal su2")
print(f"\nuniversal su2 tower: {r['stages']['instrumental']['dims']} -> {r['verdict']}")
