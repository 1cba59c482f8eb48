"""Hermitian polar spaces H(n, q^2), their ovoids and transitive-ovoid searches."""

__version__ = "0.1.0"
