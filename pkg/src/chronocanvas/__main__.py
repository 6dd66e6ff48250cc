"""``python -m chronocanvas``."""

from .cli import main

main()
