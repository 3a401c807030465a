"""Outage and capacity analysis for relaying through cars parked in a lot.

Closed forms live in :mod:`parkrelay.outage` and :mod:`parkrelay.capacity`,
the parked-car behaviour in :mod:`parkrelay.parking`, simulation in
:mod:`parkrelay.montecarlo` and the command line in :mod:`parkrelay.cli`.
"""

__version__ = "0.1.0"
