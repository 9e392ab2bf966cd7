# src/netalgebra/modules/__init__.py
