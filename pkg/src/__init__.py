"""
Fakespan: temporal forgery localization from cross-modal reconstruction discrepancies
Core source package
"""
__version__ = "0.1.0"
