"""Test suite for the qubit-phonon entanglement simulator."""
