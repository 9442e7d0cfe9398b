# Sphinx configuration for the fwaveorg documentation.

import os
import sys
sys.path.insert(0, os.path.abspath('../../'))

from fwaveorg import __version__  # noqa: E402

project = 'fwaveorg'
copyright = '2026, fwaveorg developers'
author = 'fwaveorg developers'
release = __version__

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.coverage',
    'sphinx.ext.autosummary',
    'sphinx.ext.mathjax',
]

templates_path = ['_templates']
language = 'en'
exclude_patterns = []

html_theme = 'alabaster'
html_static_path = ['_static']
