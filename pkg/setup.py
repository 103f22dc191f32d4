"""Build script: compiles the transport kernel in place when Cython and a C
compiler are available.  The same source file runs uncompiled as a plain
Python module, so a failed extension build only costs speed, not correctness
(set WASSDYN_PURE=1 to skip compilation explicitly)."""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("WASSDYN_PURE") != "1":
    try:
        from Cython.Build import cythonize

        ext = Extension(
            "wassdyn._kernels.net_simplex",
            ["src/wassdyn/_kernels/net_simplex.py"],
            # fp-contract off keeps compiled and interpreted pivot sequences
            # bit-identical (no FMA re-rounding in reduced costs).
            extra_compile_args=["-O3", "-ffp-contract=off"],
        )
        ext.optional = True
        ext_modules = cythonize(
            [ext],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
