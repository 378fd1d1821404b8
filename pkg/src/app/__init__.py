"""Shewhart charts for Kumaraswamy-distributed proportions."""
