"""Fast numerical max-convolution of nonnegative vectors and tensors.

The heavy lifting lives in the _maxconv extension module; this package
re-exports its public surface.
"""

try:
    from ._maxconv import *  # noqa: F401,F403
    from ._maxconv import __version__  # noqa: F401
except ImportError:  # extension built out-of-package (in-tree test runs)
    from _maxconv import *  # noqa: F401,F403
    from _maxconv import __version__  # noqa: F401
