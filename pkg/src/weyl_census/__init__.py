"""Schottky subgroups of SL(d,R): word census, Cartan/Jordan data and growth counting."""

__version__ = "0.1.0"
