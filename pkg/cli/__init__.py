"""Command-line surface of the Schur-sigma toolkit"""
