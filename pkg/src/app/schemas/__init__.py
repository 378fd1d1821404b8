"""Pydantic models shared by the numerical core, the services and the CLI."""
