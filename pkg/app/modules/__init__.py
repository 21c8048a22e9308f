"""Domain modules: series, modular forms, Kloosterman and Poincare sums, shifted convolutions, p-adic checks."""
