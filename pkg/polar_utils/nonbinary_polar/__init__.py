"""
Non-binary polar coding toolkit root package.
"""
