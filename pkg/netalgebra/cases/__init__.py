"""Shipped case files, loadable by name (``netalgebra cases``)."""
