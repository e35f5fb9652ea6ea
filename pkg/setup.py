"""Build hook for the optional compiled kernels.

The package is fully functional without the extension (a numpy fallback is
selected at import time); building it just makes the density/distance kernels
faster. Any failure here (no Cython, no C compiler) downgrades to a pure
Python install instead of aborting.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "crosstraj.kernels._core",
                sources=["src/crosstraj/kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - depends on build host
    print(f"crosstraj: skipping compiled kernels ({exc}); using pure Python fallback")

setup(ext_modules=ext_modules)
