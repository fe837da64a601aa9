import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # Extension is optional: wavedistill.backend falls back to the pure
    # numpy kernels when the compiled module is absent.
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "wavedistill._kernels",
                ["src/wavedistill/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
