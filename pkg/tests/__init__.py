"""Test package for MCP server data exploration."""
