"""Geographic routing simulator with intermediate-target (ITGR) forwarding."""

__version__ = "0.1.0"
