"""Compiled pulse-level Monte Carlo batch kernel."""
import math

import numpy as np
from numba import njit

# Slot order: D1 early, D1 late, D2 early, D2 late.


@njit(nogil=True, cache=True)
def _pick(u, cum):
    k = 0
    while k < 3 and u >= cum[k]:
        k += 1
    return k


@njit(nogil=True, cache=True)
def run_batch(rng, n, cum_a, cum_b, amp_a, amp_b, eff1, eff2, dark, em_x, em_z, counts):
    """Simulate ``n`` pulse pairs and accumulate into ``counts[16, 3]``.

    ``rng`` is a ``numpy.random.Generator``; ``cum_a``/``cum_b`` are
    cumulative source probabilities over (o, x, y, z); ``amp_a``/``amp_b``
    hold arrived field amplitudes indexed ``[source, bit, bin]``.  Columns of
    ``counts`` are sent, coincidences, errors.
    """
    two_pi = 2.0 * math.pi
    keep = 1.0 - dark
    for _ in range(n):
        ka = _pick(rng.random(), cum_a)
        kb = _pick(rng.random(), cum_b)
        ba = 1 if rng.random() < 0.5 else 0
        bb = 1 if rng.random() < 0.5 else 0
        # Only the difference of the two uniform global phases matters, and
        # it is itself uniform modulo 2 pi.
        delta = two_pi * rng.random()
        idx = ka * 4 + kb
        counts[idx, 0] += 1

        rot = complex(math.cos(delta), math.sin(delta))
        ae = amp_a[ka, ba, 0]
        al = amp_a[ka, ba, 1]
        be = amp_b[kb, bb, 0] * rot
        bl = amp_b[kb, bb, 1] * rot

        # Each (detector, bin) slot clicks independently given the phase; a
        # singlet event needs exactly one D1 click, so sample D1 first.
        d1e = rng.random() < 1.0 - keep * math.exp(-eff1 * 0.5 * abs(ae + be) ** 2)
        d1l = rng.random() < 1.0 - keep * math.exp(-eff1 * 0.5 * abs(al + bl) ** 2)
        if d1e == d1l:
            continue
        d2e = rng.random() < 1.0 - keep * math.exp(-eff2 * 0.5 * abs(ae - be) ** 2)
        d2l = rng.random() < 1.0 - keep * math.exp(-eff2 * 0.5 * abs(al - bl) ** 2)
        if d1e:
            hit = d2l and not d2e
        else:
            hit = d2e and not d2l
        if not hit:
            continue
        counts[idx, 1] += 1

        za = ka == 3
        zb = kb == 3
        if za != zb:
            continue
        err = ba == bb
        em = em_z if za else em_x
        if em > 0.0 and rng.random() < em:
            err = not err
        if err:
            counts[idx, 2] += 1
