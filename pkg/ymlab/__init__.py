__all__ = [
    "algebra",
    "lattice",
    "functional",
    "gauge",
    "flow",
    "asymptotics",
    "cone",
    "io",
    "config",
    "rng",
    "cli",
]
