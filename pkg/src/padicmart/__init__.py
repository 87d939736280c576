"""p-adic expectation, conditional expectation and martingales on finite spaces."""
