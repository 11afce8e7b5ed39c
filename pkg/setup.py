import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off forbids FMA contraction so the compiled kernels stay
# bit-compatible with the pure-Python reference backend.
extensions = [
    Extension(
        "rescue_spatap._kernels._cykernels",
        sources=["src/rescue_spatap/_kernels/_cykernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
