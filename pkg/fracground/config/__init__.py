"""
Configuration Package

Environment settings and the sectioned run-configuration file.
"""
