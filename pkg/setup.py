#!/usr/bin/env python

import os
import sys
import glob

try:
    from setuptools import setup
except ImportError:
    from distutils.core import setup


if "publish" in sys.argv[-1]:
    os.system("python setup.py sdist upload")
    sys.exit()


# Hackishly inject a constant into builtins to enable importing of the
# package version without importing its dependencies.
if sys.version_info[0] < 3:
    import __builtin__ as builtins
else:
    import builtins
builtins.__TOBT_SETUP__ = True
from tobt import __version__  # NOQA

setup(
    name="tobt",
    version=__version__,
    description="Tie-rank oriented Bradley-Terry models and tie-aware "
                "direct preference optimisation.",
    long_description=open("README.rst").read(),
    packages=["tobt", "tobt.tests"],
    package_data={"": ["README.rst", "LICENSE.rst", "AUTHORS.rst"]},
    include_package_data=True,
    python_requires=">=3.7",
    install_requires=["numpy", "scipy"],
    extras_require={
        "test": ["pytest", "hypothesis"],
        "demos": ["matplotlib"],
    },
    scripts=glob.glob("scripts/*.py"),
    entry_points={
        "console_scripts": ["tobt = tobt.cli:main"],
    },
    classifiers=[
        "Intended Audience :: Developers",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
    ],
)
