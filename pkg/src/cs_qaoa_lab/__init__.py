"""CS-QAOA Lab - compressed-space QAOA simulation and benchmarking."""

__version__ = "0.1.0"

__all__ = [
    "gates",
    "simulator",
    "noise",
    "qubo",
    "problems",
    "encoders",
    "constraints",
    "compression",
    "ansatz",
    "database",
    "optimizers",
    "qaoa",
    "instances",
    "experiments",
    "formatter",
    "config",
]
