"""Omega lower bounds for the VM and the fixture machines, side by side.

    python3 scripts/omega_table.py [stages]
"""

import sys

from opait.machine import fixture_machine, universal_vm
from opait.rational import fmt_rat


def main(stages=20):
    machines = [universal_vm(), fixture_machine("kraft"), fixture_machine("complexity")]
    print("n," + ",".join(m.name for m in machines) + ",vm_programs")
    vm = machines[0]
    for n in range(1, stages + 1):
        vals = [fmt_rat(m.omega_lower(n)) for m in machines]
        print(f"{n}," + ",".join(vals) + f",{len(vm.enumerate_halting(n).discovered)}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 20)
