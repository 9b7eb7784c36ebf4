"""A wait-free universal construction over emulated LL/SC, with a correctness harness and benchmarks."""

from .core import InvariantViolation, ObsoleteBatch, UniversalConstruction
from .objmodel import (
    CounterObject,
    QueueObject,
    RequestDescriptor,
    SequentialObject,
    SortedSetObject,
    StackObject,
    UnknownVariable,
    make_object,
)

__all__ = [
    "UniversalConstruction",
    "ObsoleteBatch",
    "InvariantViolation",
    "RequestDescriptor",
    "SequentialObject",
    "CounterObject",
    "StackObject",
    "QueueObject",
    "SortedSetObject",
    "UnknownVariable",
    "make_object",
]
