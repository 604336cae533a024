"""Charge-constrained flow-matching generation of amorphous materials."""

from ._amgenc import *  # noqa: F401,F403
from ._amgenc import __doc__  # noqa: F401
