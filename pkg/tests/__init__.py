# Run from the repository root: python -m unittest discover -s tests -t .
