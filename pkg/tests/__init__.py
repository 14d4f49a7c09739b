"""Test suite of the Ekman slab laboratory."""
