"""Projective POVM vs the embedded scalar mixture, measured on basis states.

Measuring e_s, the projective POVM puts (almost) all its mass on outcome s.
The embedded mixture gives a small scalar weight r(s), and those weights sum
to at most 1.  So the constant c needed for c * P(s) <= r(s) I keeps
shrinking with s.  This is a finite table, not a limit statement.

    python3 scripts/negative_control.py [S] [stage]
"""

import sys

from opait.ait import negative_control_table
from opait.strings import show


def main(S=10, n=12):
    rows = negative_control_table(S, n)
    print("s,bits,p_projective,p_embedded,ratio,required_constant")
    best = None
    for s, p, q, ratio in rows:
        best = ratio if best is None else min(best, ratio)
        print(f"{s},{show(s)},{float(p):.6f},{float(q):.6e},{float(ratio):.6e},{float(best):.6e}")


if __name__ == "__main__":
    args = [int(a) for a in sys.argv[1:]]
    main(*args)
