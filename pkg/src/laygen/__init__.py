"""Layout generation from element constraints and relationship graphs."""
