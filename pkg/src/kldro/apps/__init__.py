"""Model builders for the newsvendor and facility location applications."""
