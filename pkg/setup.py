from setuptools import setup, Extension

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None


ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [Extension("clientdiv._kernels", ["src/clientdiv/_kernels.pyx"],
                   extra_compile_args=["-O2"])],
        compiler_directives={"language_level": "3"},
    )


setup(ext_modules=ext_modules)
