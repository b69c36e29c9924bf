import os

from setuptools import Extension, setup
from Cython.Build import cythonize
import numpy as np

# -ffp-contract=off keeps the compiler from fusing a*b+c into FMA, which
# would change rounding and break bitwise agreement with the numpy backend.
# SIMD vectorization of the elementwise loops is safe and worth a lot; set
# LANDCNN_PORTABLE=1 to build without -march=native.
compile_args = ["-O3", "-ffp-contract=off", "-funroll-loops"]
if not os.environ.get("LANDCNN_PORTABLE"):
    compile_args.insert(1, "-march=native")

ext_modules = [
    Extension(
        "landcnn.kernels._fast",
        ["src/landcnn/kernels/_fast.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=compile_args,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(ext_modules, language_level="3"))
