"""Python interface to the contactlab core."""

try:
    from ._contactlab import *  # noqa: F401,F403
    from ._contactlab import __version__  # noqa: F401
except ImportError:  # direct build-tree usage: module next to this package
    from _contactlab import *  # noqa: F401,F403
    from _contactlab import __version__  # noqa: F401
