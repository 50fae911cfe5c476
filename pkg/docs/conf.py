# Sphinx configuration for the parkour-lab API reference
import os
import sys

sys.path.insert(0, os.path.abspath(".."))

import parkour_lab  # noqa: E402

project = "parkour-lab"
copyright = "2026, Parkour Lab developers"
author = "Parkour Lab developers"
release = parkour_lab.__version__

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",
    "sphinx.ext.mathjax",
]

# Docstrings use the numpy layout
napoleon_google_docstring = False
napoleon_numpy_docstring = True
autodoc_member_order = "bysource"
autodoc_mock_imports = ["scipy"]

templates_path = ["_templates"]
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]

html_theme = "press"
