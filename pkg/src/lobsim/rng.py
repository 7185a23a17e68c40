"""Named random streams for reproducible, pairable simulations.

Every run derives its streams from (master seed, run index, stream id) via
numpy SeedSequence spawn keys, so streams are reproducible and independent of
how runs are scheduled across processes. A baseline/counterfactual pair is
built from the same SeedSet: both runs see identical streams, and divergence
can come only from market state.
"""

from __future__ import annotations

import numpy as np

FUNDAMENTAL_STREAM = 0
WARMUP_STREAM = 1
AGENT_STREAM_BASE = 10


class BufferedStream:
    """Scalar uniform/normal draws with block buffering.

    Buffering changes how the generator's bit stream is chunked but the draw
    sequence remains a pure function of the consumption sequence, which is
    all the common-random-number pairing contract requires.
    """

    __slots__ = ("_gen", "_block", "_u", "_ui", "_n", "_ni")

    def __init__(self, generator: np.random.Generator, block: int = 2048):
        self._gen = generator
        self._block = block
        self._u = generator.random(block)
        self._ui = 0
        self._n = generator.standard_normal(block)
        self._ni = 0

    def u(self) -> float:
        """Next uniform draw in [0, 1)."""
        i = self._ui
        if i == self._block:
            self._u = self._gen.random(self._block)
            i = 0
        self._ui = i + 1
        return self._u[i]

    def n(self) -> float:
        """Next standard normal draw."""
        i = self._ni
        if i == self._block:
            self._n = self._gen.standard_normal(self._block)
            i = 0
        self._ni = i + 1
        return self._n[i]


class SeedSet:
    """Derived stream seeds for one run: (master seed, run index)."""

    __slots__ = ("master_seed", "run_index")

    def __init__(self, master_seed: int, run_index: int = 0):
        self.master_seed = int(master_seed)
        self.run_index = int(run_index)

    def sequence(self, stream_id: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.master_seed,
                                      spawn_key=(self.run_index, stream_id))

    def generator(self, stream_id: int) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.sequence(stream_id)))

    def stream(self, stream_id: int) -> BufferedStream:
        return BufferedStream(self.generator(stream_id))

    def agent_stream(self, agent_index: int) -> BufferedStream:
        return self.stream(AGENT_STREAM_BASE + agent_index)

    def fundamental_path(self, n_steps: int) -> np.ndarray:
        """Pre-drawn standard normal increments for the exogenous value path.

        Drawn in one block so baseline and counterfactual runs share the
        exact same path regardless of any later divergence.
        """
        return self.generator(FUNDAMENTAL_STREAM).standard_normal(n_steps)

    def __repr__(self):
        return f"SeedSet(master_seed={self.master_seed}, run_index={self.run_index})"
