"""System declarations, structural checks and the built-in registry."""
