# src/__init__.py
"""ESTA - Event-camera Star Tracking and Attitude estimation"""

__version__ = "0.1.0"
