"""The routed message unit: one action invocation packed into one flit."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Union

from cellsim.graph_store import ObjectAddress

FLIT_BITS = 256

# field widths of the packed flit
_COORD_BITS = 16
_SLOT_BITS = 32
_OPCODE_BITS = 8
_WORD_BITS = 64
ENCODED_BITS = 2 * _COORD_BITS + _SLOT_BITS + _OPCODE_BITS + 2 * _WORD_BITS


class Opcode(IntEnum):
    BFS = 0
    BFS_NEW_EDGE = 1
    INSERT_EDGE = 2
    SEED = 3


Operand = Union[int, tuple[int, float]]


@dataclass(slots=True, eq=False)
class Operon:
    dst_object: ObjectAddress
    opcode: Opcode
    operand: Operand
    injected_at: int = field(default=-1, compare=False)

    @property
    def dst_cc(self) -> tuple[int, int]:
        return self.dst_object.cc

    def encode(self) -> int:
        """Pack into an integer of at most ``FLIT_BITS`` bits."""
        x, y = self.dst_object.cc
        if isinstance(self.operand, tuple):
            w0, weight = self.operand
            w1 = struct.unpack("<Q", struct.pack("<d", float(weight)))[0]
        else:
            w0, w1 = self.operand, 0
        for value, bits in ((x, _COORD_BITS), (y, _COORD_BITS), (self.dst_object.slot, _SLOT_BITS), (w0, _WORD_BITS)):
            if not 0 <= value < (1 << bits):
                raise OverflowError(f"value {value} does not fit in {bits} bits")
        word = x
        word = (word << _COORD_BITS) | y
        word = (word << _SLOT_BITS) | self.dst_object.slot
        word = (word << _OPCODE_BITS) | int(self.opcode)
        word = (word << _WORD_BITS) | w0
        word = (word << _WORD_BITS) | w1
        return word

    @classmethod
    def decode(cls, word: int) -> "Operon":
        mask64 = (1 << _WORD_BITS) - 1
        w1 = word & mask64
        word >>= _WORD_BITS
        w0 = word & mask64
        word >>= _WORD_BITS
        opcode = Opcode(word & ((1 << _OPCODE_BITS) - 1))
        word >>= _OPCODE_BITS
        slot = word & ((1 << _SLOT_BITS) - 1)
        word >>= _SLOT_BITS
        y = word & ((1 << _COORD_BITS) - 1)
        x = word >> _COORD_BITS
        if opcode is Opcode.INSERT_EDGE:
            operand: Operand = (w0, struct.unpack("<d", struct.pack("<Q", w1))[0])
        else:
            operand = w0
        return cls(ObjectAddress((x, y), slot), opcode, operand)
