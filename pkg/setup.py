import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "pathrep.kernels._ckernels",
                ["src/pathrep/kernels/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off: no FMA contraction, so the compiled
                # kernels stay bit-identical to the pure-Python fallback.
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

# The compiled kernels are optional: without a compiler the package falls
# back to the pure-Python implementations selected in pathrep.kernels.
setup(ext_modules=ext_modules)
