"""Packaged default lexicon and starter correctness corpus."""
