"""
ESTA Tests
==========
"""
