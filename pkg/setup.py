from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # fall back to the pure-Python kernels
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "ppdrive._kernels",
                ["src/ppdrive/_kernels.pyx"],
                libraries=["gmp"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
