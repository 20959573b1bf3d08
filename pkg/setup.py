import sys

from setuptools import Extension, setup

# The compiled kernels are an optional speedup; the package runs on the pure
# numpy fallback when Cython or a C compiler is missing.
ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "artifact._kernels_cy",
                ["src/artifact/_kernels_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError as exc:
    sys.stderr.write(f"artifact: building without compiled kernels ({exc})\n")

setup(ext_modules=ext_modules)
