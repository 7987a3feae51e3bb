from Cython.Build import cythonize
from setuptools import Extension, setup

setup(
    ext_modules=cythonize(
        [Extension("latticeslice._sweep", ["src/latticeslice/_sweep.pyx"])],
        compiler_directives={"language_level": "3"},
    )
)
