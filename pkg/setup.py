from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "blindpir.kernels._fast",
                ["src/blindpir/kernels/_fast.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    # no Cython: install with the pure numpy backend only
    pass

setup(ext_modules=ext_modules)
