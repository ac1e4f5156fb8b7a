"""Pass-based local improvement: flip variables with non-negative gain until stuck."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class FlipOutcome:
    assignment: tuple
    flips_applied: int
    passes: int
    final_score: float


def flip(state, rng):
    """Improve `state` in place by repeated passes of greedy/sideways flips.

    Draws one random permutation of the variables (Fisher-Yates over `rng`)
    and reuses it every pass.  Within a pass each variable is tried in
    permutation order; a flip is kept iff its gain is >= 0, and only positive
    gains count toward the pass improvement.  Stops when a pass yields zero
    improvement.  The unsat count never increases, so the loop runs at most
    (initial unsat count + 1) passes.
    """
    n = state.formula.num_vars
    perm = list(range(1, n + 1))
    rng.shuffle(perm)

    flips_applied = 0
    passes = 0
    improvement = 1
    while improvement > 0:
        improvement = 0
        passes += 1
        for var in perm:
            gain = state.flip_gain(var)
            if gain >= 0:
                state.apply_flip(var)
                flips_applied += 1
                improvement += gain
    return FlipOutcome(
        assignment=tuple(state.values),
        flips_applied=flips_applied,
        passes=passes,
        final_score=state.unsat_fraction(),
    )
