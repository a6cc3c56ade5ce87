"""Independent references: dense Lindblad, Pfaffian evaluator, mean-field and closed forms."""
