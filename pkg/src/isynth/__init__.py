"""isynth: a language kernel with interactive-syntax extensions.

Editors are first-class syntax: they persist as text inside ``#editor``
blocks, run user code at edit time, render as widgets over a session
protocol, and elaborate to ordinary code at compile time.
"""

from .editor_form import EditorBinding, EditorValue
from .kernel import Kernel
from .printer import write_form, write_module
from .reader import read_form, read_module
from .runtime import Session

__all__ = ["EditorBinding", "EditorValue", "Kernel", "Session",
           "read_form", "read_module", "write_form", "write_module"]
__version__ = "0.1.0"
