"""Single source of the package version for code and artifact headers."""

VERSION = "0.1.0"
