import os

from setuptools import Extension, setup

# The pure-Python twin (ruinlab._core_py) keeps the package importable when
# the extension cannot be built; RUINLAB_NO_EXT=1 skips compilation.
ext_modules = []
if os.environ.get("RUINLAB_NO_EXT", "") in ("", "0"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "ruinlab._core",
                ["src/ruinlab/_core.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
