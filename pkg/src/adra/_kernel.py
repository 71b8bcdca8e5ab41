"""Compiled inner loop of the slotted collision-channel simulator."""
import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def run_slots(ages, table, draws, measure, age_sums, hist, counts):
    """Advance ``ages`` through ``draws.shape[0]`` slots in place.

    ``table[k]`` is the access probability at age ``k + 1``; ages beyond the
    table use its last entry.  When ``measure`` is set, the start-of-slot age
    of every device is accumulated into ``age_sums`` and ``hist`` (last bucket
    is overflow), and ``counts`` receives idle, success, collision and
    transmission-attempt tallies in that order.
    """
    n_slots, n_dev = draws.shape
    last = table.shape[0] - 1
    overflow = hist.shape[0] - 1
    for t in range(n_slots):
        winner = -1
        n_tx = 0
        for i in range(n_dev):
            a = ages[i]
            if measure:
                age_sums[i] += a
                hist[min(a, overflow)] += 1
            k = a - 1
            if k > last:
                k = last
            if draws[t, i] < table[k]:
                n_tx += 1
                winner = i
        for i in range(n_dev):
            ages[i] += 1
        if n_tx == 1:
            ages[winner] = 1
        if measure:
            if n_tx == 0:
                counts[0] += 1
            elif n_tx == 1:
                counts[1] += 1
            else:
                counts[2] += 1
            counts[3] += n_tx


def empty_accumulators(n_dev, pmf_cap):
    return (np.zeros(n_dev, dtype=np.int64),
            np.zeros(pmf_cap + 2, dtype=np.int64),
            np.zeros(4, dtype=np.int64))
