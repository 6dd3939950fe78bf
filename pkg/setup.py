import os

from setuptools import setup

ext_modules = []
if os.environ.get("CONVEXPROJ_PURE", "") not in ("1", "true"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("convexproj._kernels", ["src/convexproj/_kernels.pyx"],
                       include_dirs=[numpy.get_include()])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
