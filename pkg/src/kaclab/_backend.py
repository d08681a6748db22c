"""Pick the counting kernel at import time.

The compiled extension is used when it imports; KACLAB_BACKEND=python forces
the numpy fallback. Both expose ``point_signs`` and ``count_open_batch``.
"""
import os

BACKEND = "python"
if os.environ.get("KACLAB_BACKEND", "").lower() != "python":
    try:
        from ._kernel import count_open_batch, point_signs  # noqa: F401
        BACKEND = "compiled"
    except ImportError:
        pass
if BACKEND == "python":
    from ._fallback import count_open_batch, point_signs  # noqa: F401
