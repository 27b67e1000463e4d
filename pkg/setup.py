"""Build script for the compiled skip-gram training kernel.

The extension is optional: if Cython or a C compiler is unavailable the
package installs anyway and falls back to the pure-Python kernel in
``hetlink.skipgram._sgns_ref``.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "hetlink.skipgram._sgns_fast",
                ["src/hetlink/skipgram/_sgns_fast.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
