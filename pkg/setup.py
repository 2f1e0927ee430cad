"""Builds the optional compiled sender loop; the package works without it."""
import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("CYCLIC_ETL_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [Extension(
                "cyclic_etl._kernels",
                ["src/cyclic_etl/_kernels.pyx"],
                # strict IEEE evaluation order; the Python fallback must match bit for bit
                extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"],
                optional=True,
            )],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
