"""
Test suite for mpcmp-toolkit.
"""
