"""
API module for the LADR retrieval engine
Contains the command-line surface
"""

from .commands import cli

__all__ = ['cli']
