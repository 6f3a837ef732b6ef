import os

from setuptools import Extension, setup

# The compiled kernels are an optional speedup; the package falls back to the
# pure-Python twin when the extension is absent (see raceoverlay/kernels.py).
ext_modules = []
if os.environ.get("OVERLAY_PURE_PYTHON") != "1":
    try:
        from Cython.Build import cythonize

        ext = Extension(
            "raceoverlay._kernels_c",
            ["src/raceoverlay/_kernels_c.pyx"],
            # -ffp-contract=off blocks FMA contraction and -fno-builtin-sincos
            # blocks GCC's sin+cos fusion; both are needed to keep the
            # extension bit-identical to the pure-Python kernels.
            extra_compile_args=["-O2", "-ffp-contract=off", "-fno-builtin-sincos", "-fno-builtin-sin", "-fno-builtin-cos"],
        )
        ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})
    except Exception as exc:  # pragma: no cover - build-environment dependent
        print(f"warning: building without compiled kernels ({exc})")
        ext_modules = []

setup(ext_modules=ext_modules)
