"""Unimodal ordinal classification toolkit."""

from ._core import *  # noqa: F401,F403
from ._core import ContractViolation, DataError, DomainError  # noqa: F401
