"""Python bindings for the ldplab C++ core."""

from ._ldplab import *  # noqa: F401,F403
from ._ldplab import __version__, LdpError  # noqa: F401
