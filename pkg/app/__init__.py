"""
F-nef Verifier - exact, certificate-producing checks of F-nef divisors on
the moduli space of stable rational pointed curves under symmetric group actions.
"""

__version__ = "0.1.0"
