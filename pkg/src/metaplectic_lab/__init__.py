"""metaplectic_lab: symplectic operator calculus, time-frequency norms,
and a desk-scale verification harness for their decay estimates."""

__version__ = "0.1.0"

_SUBMODULES = (
    "symplectic",
    "sampling",
    "metaplectic",
    "timefreq",
    "harness",
    "fixtures",
    "reporting",
    "config",
    "cli",
)


def __getattr__(name):
    # lazy imports keep `import metaplectic_lab.cli` light so the CLI can
    # pin BLAS thread counts before numpy loads
    if name in _SUBMODULES:
        import importlib

        module = importlib.import_module(f".{name}", __name__)
        globals()[name] = module
        return module
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
