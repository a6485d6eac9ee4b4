from setuptools import setup
from setuptools_rust import Binding, RustExtension

# The native kernel is optional: if cargo is missing or the build fails the
# package still installs and falls back to the pure-Python kernel.
setup(
    rust_extensions=[
        RustExtension(
            "zkpfedeval._curve_native",
            path="rust/Cargo.toml",
            binding=Binding.PyO3,
            optional=True,
            debug=False,
        )
    ],
    zip_safe=False,
)
