import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "simbayes.backends._native",
    ["src/simbayes/backends/_native.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3", "-fopenmp", "-ffp-contract=off"],
    extra_link_args=["-fopenmp"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(
    ext_modules=cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
)
