"""Lattice surgery compiler bindings.

Circuit documents (JSON) go in; cycle-exact lattice surgery instruction
streams, board layouts and cost reports come out. See the project README for
the document schemas.
"""

try:
    from ._core import *  # noqa: F401,F403
    from ._core import __version__  # noqa: F401
except ImportError:  # development layout: extension built out of tree
    import os
    import sys

    _module_dir = os.environ.get("LSC_MODULE_DIR")
    if not _module_dir:
        raise
    sys.path.insert(0, _module_dir)
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
