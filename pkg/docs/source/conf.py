# Sphinx configuration for the spikegat documentation.

import os.path
import sys

# The package lives in src/, two levels above this file.
TOP_DIR_PATH = os.path.abspath("../../")
SRC_DIR_PATH = os.path.join(TOP_DIR_PATH, "src")
sys.path.insert(0, SRC_DIR_PATH)

import spikegat.version  # noqa: E402

PROJECT_NAME = "spikegat"
AUTHOR_NAME = "spikegat contributors"
COPYRIGHT = f"2025-2026, {AUTHOR_NAME}"

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.coverage",
    "sphinx.ext.mathjax",
    "sphinx.ext.viewcode",
]

source_suffix = ".rst"
master_doc = "index"
project = PROJECT_NAME
copyright = COPYRIGHT
version = spikegat.version.VERSION_STRING
release = version
exclude_patterns = ["examples"]
pygments_style = "sphinx"

autodoc_member_order = "bysource"

html_theme = "pyramid"
htmlhelp_basename = f"{PROJECT_NAME}doc"

man_pages = [("index", PROJECT_NAME, f"{PROJECT_NAME} Documentation", [AUTHOR_NAME], 1)]
