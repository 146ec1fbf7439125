# -*- coding: utf-8 -*-
"""
Small file helpers shared by the command line tools.
"""

from __future__ import division, print_function

__all__ = ["atomic_write", "file_digest", "text_digest"]

import io
import os
import hashlib


def atomic_write(path, text):
    """
    Write ``text`` to ``path`` through a temporary sibling file and an
    atomic rename, so that ``path`` never holds a partial file.
    """
    directory = os.path.dirname(path)
    if directory and not os.path.isdir(directory):
        os.makedirs(directory)
    tmp_path = path + ".tmp"
    try:
        with io.open(tmp_path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp_path, path)
    finally:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
    return path


def text_digest(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def file_digest(path, chunk=1 << 16):
    """SHA-256 hex digest of the bytes of ``path``."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(chunk), b""):
            h.update(block)
    return h.hexdigest()
