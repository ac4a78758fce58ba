"""Time-stepping feature slice: the coupled semi-implicit scheme."""
