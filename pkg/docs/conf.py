#!/usr/bin/env python
# -*- coding: utf-8 -*-

from __future__ import (division, print_function, absolute_import,
                        unicode_literals)

import os
import sys

d = os.path.dirname
sys.path.insert(0, d(d(os.path.abspath(__file__))))
from tobt import __version__  # NOQA

extensions = ["sphinx.ext.autodoc", "sphinx.ext.intersphinx",
              "sphinx.ext.mathjax"]
intersphinx_mapping = {"numpy": ("https://numpy.org/doc/stable/", None),
                       "scipy": ("https://docs.scipy.org/doc/scipy/", None)}
source_suffix = ".rst"
master_doc = "index"
exclude_patterns = ["_build"]
templates_path = ["_templates"]

project = "tobt"
copyright = "2024 the tobt contributors"
version = __version__
release = __version__

html_theme = "alabaster"
html_show_sphinx = True
html_show_sourcelink = False
pygments_style = "sphinx"
