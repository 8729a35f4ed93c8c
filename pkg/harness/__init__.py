"""
Harness

Settings, run manifests, distribution comparison and the worked example.
"""
