"""Quasisymmetric conjugacies, Beurling-Ahlfors extensions and UAC certificates
for expanding circle endomorphisms."""

__version__ = "0.1.0"
