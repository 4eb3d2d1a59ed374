#!/usr/bin/env python3
"""What the players know when a controller withholds.

One withheld record seals the secret: the players' joint state is exactly a
maximally mixed qubit in the withheld slot, tensored with the partial trace
of the original state - it carries no information at all about the missing
qubit.  We compute that state by exact branch enumeration and compare it to
the closed-form prediction.
"""

import numpy as np

from cqss import (
    AccessPolicy,
    PartyId,
    RandomSource,
    Sealed,
    expected_withheld_density,
    haar_random_state,
    no_information_audit,
    setup,
    trace_distance,
)

secret = haar_random_state(3, RandomSource(99))
policy = AccessPolicy.round_robin(3, 3, 3)
policy.release[PartyId.controller(2)] = False  # record 2 never arrives

run = setup(3, 3, 3, secret, policy, RandomSource(4))
run.distribute_all()
run.transport_all()

outcome = run.reconstruct()
assert isinstance(outcome, Sealed)
print("reconstruction outcome:", outcome.reason)
print()

players_state = run.withheld_state({2})
prediction = expected_withheld_density(secret, 1)
print("players' exact state vs closed-form prediction:")
print("  trace distance =", f"{trace_distance(players_state, prediction):.3e}")
print()

tensor = players_state.entries.reshape((2,) * 6)
slot2 = np.trace(np.trace(tensor, axis1=0, axis2=3), axis1=1, axis2=3)
print("reduced state of the withheld slot alone:")
print(np.round(slot2.real, 6))
print("(the maximally mixed qubit: a coin that remembers nothing)")
print()

for withheld in ({1}, {1, 2}, {1, 2, 3}):
    audit = no_information_audit(run, withheld)
    print(f"audit withheld={sorted(withheld)}: trace distance "
          f"{audit.distance:.3e}, pass={audit.passed}")
