from ._degen import *  # noqa: F401,F403
