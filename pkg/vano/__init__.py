"""Variational autoencoding neural operators for functional data."""
