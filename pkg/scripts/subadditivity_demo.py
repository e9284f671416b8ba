"""Empirical look at Ĥ(<s,t>) vs Ĥ(s) + Ĥ(t) at a finite stage.

Whether an operator analogue of subadditivity holds is an open question.
Nothing here is asserted; the script only prints the diagonal gap
max_i [Ĥ(<s,t>)_ii - Ĥ(s)_ii - Ĥ(t)_ii] from the certified upper enclosures,
which compares upper bounds and so proves nothing either way.

    python3 scripts/subadditivity_demo.py [stage] [max_index]
"""

import sys
from fractions import Fraction

from opait import ait
from opait.constructor import ConstructorConfig, Dovetailer, scalar_floor
from opait.semipovm import two_pow
from opait.strings import pair, show

EPS = Fraction(1, 1 << 16)


def main(n=18, top=4):
    d = Dovetailer(ConstructorConfig(plants=((2, "complexity:complexity"), (3, "projective"))))
    d.advance_to(n)
    print("s,t,pair,max_diag_gap")
    for s in range(1, top + 1):
        for t in range(1, top + 1):
            u = pair(s, t)
            if two_pow(-n) >= scalar_floor(u):
                continue
            joint = ait.hhat_upper(d, u, n, EPS).operator
            both = ait.hhat_upper(d, s, n, EPS).operator + ait.hhat_upper(d, t, n, EPS).operator
            gap = ait.diagonal_gap(joint, both)
            print(f"{show(s)},{show(t)},{show(u)},{float(gap):.4f}")
    print("# open question: these gaps are indicative only")


if __name__ == "__main__":
    args = [int(a) for a in sys.argv[1:]]
    main(*args)
