"""JSON reports and CSV tables on disk."""
