"""Quantum relational database simulator with a classical reference oracle."""

from .errors import QrelError
from .qstate import StateVector
from .relation import Schema, WeightedRelation, decode_tuple, encode_tuple, load_relation

__all__ = [
    "QrelError",
    "Schema",
    "StateVector",
    "WeightedRelation",
    "decode_tuple",
    "encode_tuple",
    "load_relation",
]
