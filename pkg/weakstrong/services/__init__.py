"""Services for sweep orchestration and artifact persistence."""
