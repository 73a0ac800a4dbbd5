from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    ext = Extension(
        "limitcurves._scan_cy",
        ["src/limitcurves/_scan_cy.pyx"],
        optional=True,
    )
    extensions = cythonize([ext], language_level="3")

setup(ext_modules=extensions)
