"""Static detection of cross-namespace reference vulnerabilities in Kubernetes operators."""

__version__ = "0.1.0"
