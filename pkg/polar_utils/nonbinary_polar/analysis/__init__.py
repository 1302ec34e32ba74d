"""
Analysis package initialization.
"""
