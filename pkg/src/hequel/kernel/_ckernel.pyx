# cython: language_level=3
"""Compiled gate kernel.

Behavioural twin of ``pykernel``: same API, same counter updates, same
nonce stream, same exceptions. Any observable divergence between the two
is a bug (the parity tests compare them gate by gate). Keep edits to the
two files in lockstep.
"""

import sys

from hequel.errors import LadderExhausted, LadderMismatch

MODE_CIRCULAR = 0
MODE_LEVELED = 1

cdef int _MODE_LEVELED_C = 1


cdef class KernelState:
    """Per-ladder evaluation state: mode, budget, counters, nonce stream."""

    cdef public int mode
    cdef public int depth_budget
    cdef public int num_epochs
    cdef public bint auto_refresh
    cdef readonly str ladder_id
    cdef public long long xor_count
    cdef public long long and_count
    cdef public long long refresh_count
    cdef public long long encrypt_count
    cdef public long long fault_gate
    cdef public unsigned long long nonce_state
    cdef public object impl

    def __init__(self, int mode, int depth_budget, int num_epochs,
                 nonce_state, str ladder_id=""):
        if depth_budget < 1:
            raise ValueError("depth_budget must be >= 1")
        if num_epochs < 1:
            raise ValueError("num_epochs must be >= 1")
        self.mode = mode
        self.depth_budget = depth_budget
        self.num_epochs = num_epochs
        self.auto_refresh = True
        self.ladder_id = ladder_id
        self.xor_count = 0
        self.and_count = 0
        self.refresh_count = 0
        self.encrypt_count = 0
        self.fault_gate = -1
        self.nonce_state = <unsigned long long> (nonce_state & 0xFFFFFFFFFFFFFFFF)
        self.impl = sys.modules[__name__]

    def gate_total(self):
        return self.xor_count + self.and_count


cdef class CipherBit:
    """Opaque encrypted bit; payload is reachable only through ``_reveal``."""

    cdef int _payload
    cdef readonly int epoch
    cdef readonly int depth
    cdef unsigned long long _nonce
    cdef readonly KernelState _state

    def __repr__(self):
        return f"CipherBit(epoch={self.epoch}, depth={self.depth})"


cdef inline unsigned long long _next_nonce(KernelState s):
    cdef unsigned long long z
    s.nonce_state += 0x9E3779B97F4A7C15ULL
    z = s.nonce_state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline CipherBit _mk(KernelState s, int payload, int epoch, int depth,
                          unsigned long long nonce):
    cdef CipherBit c = CipherBit.__new__(CipherBit)
    c._payload = payload
    c.epoch = epoch
    c.depth = depth
    c._nonce = nonce
    c._state = s
    return c


def new_state(int mode, int depth_budget, int num_epochs, nonce_state,
              str ladder_id=""):
    return KernelState(mode, depth_budget, num_epochs, nonce_state, ladder_id)


def fresh_bit(KernelState s, int payload, int epoch):
    """Encrypt a literal bit under the key of ``epoch``; depth starts at 0."""
    s.encrypt_count += 1
    return _mk(s, payload & 1, epoch, 0, _next_nonce(s))


def bit_from_parts(KernelState s, int payload, int epoch, int depth, nonce):
    """Rebuild a ciphertext from its serialized parts (no counter bump)."""
    return _mk(s, payload & 1, epoch, depth,
               <unsigned long long> (nonce & 0xFFFFFFFFFFFFFFFF))


cdef CipherBit _refresh(CipherBit c):
    cdef KernelState s = c._state
    cdef int epoch
    if s.mode == _MODE_LEVELED_C:
        if c.epoch >= s.num_epochs:
            raise LadderExhausted(
                f"refresh past epoch {c.epoch} of a {s.num_epochs}-level ladder")
        epoch = c.epoch + 1
    else:
        epoch = c.epoch
    s.refresh_count += 1
    return _mk(s, c._payload, epoch, 0, _next_nonce(s))


def refresh(CipherBit c):
    """Bootstrap: reset depth to 0. Leveled mode moves to the next epoch and
    fails past the top of the ladder; circular mode stays on the same key."""
    return _refresh(c)


cdef inline KernelState _check_ladder(CipherBit a, CipherBit b):
    cdef KernelState s = a._state
    if b._state is not s:
        raise LadderMismatch("operands were encrypted under different ladders")
    return s


cdef tuple _align(CipherBit a, CipherBit b):
    while a.epoch < b.epoch:
        a = _refresh(a)
    while b.epoch < a.epoch:
        b = _refresh(b)
    return a, b


def xor(CipherBit a, CipherBit b):
    cdef KernelState s = _check_ladder(a, b)
    cdef int p, d
    if a.epoch != b.epoch:
        a, b = _align(a, b)
    s.xor_count += 1
    p = a._payload ^ b._payload
    if s.fault_gate >= 0 and s.xor_count + s.and_count == s.fault_gate:
        p ^= 1
    d = a.depth if a.depth >= b.depth else b.depth
    return _mk(s, p, a.epoch, d, _next_nonce(s))


def and_(CipherBit a, CipherBit b):
    cdef KernelState s = _check_ladder(a, b)
    cdef int p, d
    if a.epoch != b.epoch:
        a, b = _align(a, b)
    d = (a.depth if a.depth >= b.depth else b.depth) + 1
    if d > s.depth_budget and s.auto_refresh:
        if a.depth:
            a = _refresh(a)
        if b.depth:
            b = _refresh(b)
        if a.epoch != b.epoch:
            a, b = _align(a, b)
        d = (a.depth if a.depth >= b.depth else b.depth) + 1
    s.and_count += 1
    p = a._payload & b._payload
    if s.fault_gate >= 0 and s.xor_count + s.and_count == s.fault_gate:
        p ^= 1
    return _mk(s, p, a.epoch, d, _next_nonce(s))


def not_(CipherBit a):
    return xor(a, fresh_bit(a._state, 1, a.epoch))


def or_(CipherBit a, CipherBit b):
    t1 = and_(a, b)
    t2 = and_(not_(a), b)
    t3 = and_(a, not_(b))
    return xor(t1, xor(t2, t3))


def _reveal(CipherBit c):
    """Internal: raw payload access for decryption and serialization."""
    return c._payload


def _nonce_of(CipherBit c):
    return c._nonce
