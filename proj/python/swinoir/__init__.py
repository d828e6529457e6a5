"""Windowed-attention super-resolution with interval dense connections."""

from ._swinoir import *  # noqa: F401,F403
from ._swinoir import __doc__  # noqa: F401
