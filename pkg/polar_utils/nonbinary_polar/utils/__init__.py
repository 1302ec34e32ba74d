"""
Utilities package initialization.
"""
