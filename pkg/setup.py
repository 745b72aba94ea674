"""Build hook for the optional compiled trial kernel.

If Cython or a C compiler is missing the package still installs and runs on
the pure-numpy kernel.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "clsc._kernel",
                ["src/clsc/_kernel.pyx"],
                include_dirs=["src/clsc"],
                extra_compile_args=["-O3", "-fcx-limited-range"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
