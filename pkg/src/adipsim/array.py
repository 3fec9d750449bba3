"""Cycle-stepped model of the n x n adaptive-precision array.

Register discipline: every step reads only state registered at the end of
the previous step, so PEs of one cycle evaluate in any order (here: as
whole-grid numpy operations).

Dataflow per step:

* a fresh input row enters PE row 0 unskewed (PE(0, c) gets element c);
* the input registered at PE(r, c) reappears at PE(r+1, (c-1) mod n),
  wrapping from the leftmost column to the rightmost of the next row;
* the four per-PE group products ride dedicated buses straight down each
  column, one PE row per cycle, in lockstep with the diagonal input wave;
* below each column a shared two-stage shift-add folds the buses. The
  output tap depends on the precision: 2-bit weights read the PE buses
  directly, 4-bit the first stage (two results), 8-bit the second stage.

Because inputs enter unskewed and the wave stays aligned, all n column
results of one input row emerge on the same cycle; no output-deskew FIFOs
exist anywhere in the model.
"""

from __future__ import annotations

import io
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .numerics import PSUM_BITS, signed_range
from .pe import PhaseError, weight_slots
from .preprocess import PackedWeightTile, Precision, PrecisionMode

_ACT_MIN, _ACT_MAX = signed_range(8)
_PSUM_LIMIT = 1 << (PSUM_BITS - 1)

TRACE_HEADER = "cycle,row,col,input,psum0,psum1,psum2,psum3"


@dataclass
class CollectedRow:
    """One streamed input row's results: per active matrix, one output row."""

    index: int
    cycle: int
    outputs: list[np.ndarray]


class ArraySim:
    """Single-owner, sequentially stepped simulator instance.

    `mac_stages` counts psum pipeline registers at the column bottom (the
    bottom PE's psum register is the first); `reduce_stages` counts shared
    shift-add registers traversed on output, at least the structural depth
    of the precision (2 for W8, 1 for W4, 0 for W2).
    """

    def __init__(
        self,
        n: int,
        mode: PrecisionMode,
        mac_stages: int = 1,
        reduce_stages: Optional[int] = None,
        overlap_weights: bool = False,
        trace: Optional[io.TextIOBase] = None,
    ):
        if n < 1:
            raise ValueError(f"array size must be >= 1, got {n}")
        if mac_stages < 1:
            raise ValueError(f"mac_stages must be >= 1, got {mac_stages}")
        structural = mode.precision.reducer_stages
        if reduce_stages is None:
            reduce_stages = structural
        if reduce_stages < structural:
            raise ValueError(
                f"reduce_stages={reduce_stages} below the structural depth "
                f"{structural} of {mode.precision.name}"
            )
        self.n = n
        self.mode = mode
        self.mac_stages = mac_stages
        self.reduce_stages = reduce_stages
        self.overlap_weights = overlap_weights
        self.cycle = 0
        self._trace = trace
        self._loaded = False
        self._slots = np.zeros((4, n, n), dtype=np.int64)
        self._zero_row = np.zeros(n, dtype=np.int64)
        self._reset_pipeline()
        if trace is not None:
            try:
                fresh = trace.tell() == 0
            except (OSError, io.UnsupportedOperation):
                fresh = True
            if fresh:
                trace.write(TRACE_HEADER + "\n")

    # -- state inspection (read-only copies) --------------------------------

    @property
    def input_registers(self) -> np.ndarray:
        return self._inputs.copy()

    @property
    def psum_registers(self) -> np.ndarray:
        return self._psums.copy()

    def _reset_pipeline(self) -> None:
        n = self.n
        self._inputs = np.zeros((n, n), dtype=np.int64)
        self._psums = np.zeros((4, n, n), dtype=np.int64)
        self._stage1 = np.zeros((2, n), dtype=np.int64)
        self._stage2 = np.zeros(n, dtype=np.int64)
        self._pre = deque(
            np.zeros((4, n), dtype=np.int64) for _ in range(self.mac_stages - 1)
        )
        extra = self.reduce_stages - self.mode.precision.reducer_stages
        self._out_hist: deque[list[np.ndarray]] = deque(maxlen=extra + 1)

    # -- phases --------------------------------------------------------------

    def load_weights(self, packed: PackedWeightTile) -> None:
        """Load an n x n packed tile vertically; clears all compute state.

        Costs n cycles (one row per cycle) unless the instance was built
        with `overlap_weights=True`, which models double-buffered loading
        hidden behind the previous tile's drain.
        """
        if packed.n != self.n:
            raise ValueError(f"packed tile is {packed.n}x{packed.n}, array is {self.n}x{self.n}")
        if packed.mode != self.mode:
            raise ValueError(f"packed mode {packed.mode} does not match array mode {self.mode}")
        precision = self.mode.precision
        for k in range(self.n):
            for j in range(self.n):
                self._slots[:, k, j] = weight_slots(int(packed.words[k, j]), precision)
        self._reset_pipeline()
        if not self.overlap_weights:
            self.cycle += self.n
        self._loaded = True

    # -- one clock -----------------------------------------------------------

    def _step(self, row_in: np.ndarray) -> list[np.ndarray]:
        prev_bottom = self._psums[:, -1, :].copy()
        if self._pre:
            self._pre.append(prev_bottom)
            feed = self._pre.popleft()
        else:
            feed = prev_bottom
        new_stage1 = np.stack((feed[0] + (feed[1] << 2), feed[2] + (feed[3] << 2)))
        new_stage2 = self._stage1[0] + (self._stage1[1] << 4)

        input_in = np.empty_like(self._inputs)
        input_in[0] = row_in
        if self.n > 1:
            # registered value at (r, c) moves to (r+1, (c-1) mod n)
            input_in[1:] = np.roll(self._inputs[:-1], -1, axis=1)
        psums_in = np.zeros_like(self._psums)
        psums_in[:, 1:, :] = self._psums[:, :-1, :]
        self._psums = psums_in + input_in[None, :, :] * self._slots
        self._inputs = input_in
        self._stage1 = new_stage1
        self._stage2 = new_stage2
        self.cycle += 1

        assert abs(self._psums).max() < _PSUM_LIMIT, "psum bus overflow"
        assert abs(self._stage2).max() < _PSUM_LIMIT, "reducer overflow"

        tap = self._tap()
        self._out_hist.append(tap)
        if self._trace is not None:
            self._write_trace()
        if len(self._out_hist) == self._out_hist.maxlen:
            return self._out_hist[0]
        return tap  # pipeline still filling; never observed at a valid cycle

    def _tap(self) -> list[np.ndarray]:
        precision = self.mode.precision
        if precision is Precision.W8:
            return [self._stage2.copy()]
        if precision is Precision.W4:
            return [self._stage1[t].copy() for t in range(self.mode.nw)]
        if self._pre:
            delayed = self._pre[0]
            return [delayed[t].copy() for t in range(self.mode.nw)]
        return [self._psums[t, -1, :].copy() for t in range(self.mode.nw)]

    def _write_trace(self) -> None:
        for r in range(self.n):
            for c in range(self.n):
                p = self._psums[:, r, c]
                self._trace.write(
                    f"{self.cycle},{r},{c},{self._inputs[r, c]},{p[0]},{p[1]},{p[2]},{p[3]}\n"
                )

    # -- streaming -----------------------------------------------------------

    def stream(self, a_rows: Sequence[np.ndarray]) -> list[CollectedRow]:
        """Feed one input row per cycle, then drain until all rows emerge.

        Returns, in input order, each row's per-matrix output rows with the
        absolute cycle at which the whole row left the array.
        """
        if not self._loaded:
            raise PhaseError("streaming before weight load")
        rows = np.asarray(a_rows, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[1] != self.n:
            raise ValueError(f"input rows must be R x {self.n}, got {rows.shape}")
        if rows.size and (rows.min() < _ACT_MIN or rows.max() > _ACT_MAX):
            raise ValueError("input element outside signed 8-bit range")
        count = rows.shape[0]
        first_valid = self.n + self.mac_stages - 1 + self.reduce_stages
        total_steps = count + first_valid - 1
        collected = []
        for s in range(1, total_steps + 1):
            row_in = rows[s - 1] if s <= count else self._zero_row
            tap = self._step(row_in)
            i = s - first_valid
            if 0 <= i < count:
                collected.append(CollectedRow(index=i, cycle=self.cycle, outputs=tap))
        return collected

    def run_tile(self, packed: PackedWeightTile, a_tile: np.ndarray) -> tuple[list[np.ndarray], int]:
        """Load one weight tile, stream one n x n input tile, gather results.

        Returns the nw exact product matrices and the streaming latency in
        cycles (weight-load cycles are tracked on `self.cycle` separately).
        """
        a_tile = np.asarray(a_tile)
        if a_tile.shape != (self.n, self.n):
            raise ValueError(f"input tile must be {self.n}x{self.n}, got {a_tile.shape}")
        self.load_weights(packed)
        start = self.cycle
        collected = self.stream(a_tile)
        cycles = self.cycle - start
        outputs = [
            np.stack([row.outputs[t] for row in collected]) for t in range(self.mode.nw)
        ]
        return outputs, cycles
