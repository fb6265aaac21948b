"""Segmentation ensemble fusion and evaluation."""

from ._segfusion import *  # noqa: F401,F403
from ._segfusion import (
    DomainError,
    Error,
    IoError,
    ParseError,
    ShapeError,
    __doc__,
)

__version__ = "0.1.0"
