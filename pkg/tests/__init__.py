"""
Test suite for czgrid
"""
