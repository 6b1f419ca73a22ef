#!/usr/bin/env python3
"""Run the acceptance suite with its PASS/FAIL lines visible."""

import sys

import pytest

if __name__ == "__main__":
    raise SystemExit(
        pytest.main(["tests/test_acceptance.py", "-q", "-s"] + sys.argv[1:])
    )
