"""Directed graphs, properads and their hypergraph and groupoid variants."""
